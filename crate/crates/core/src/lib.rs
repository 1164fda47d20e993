pub mod bundle;
pub mod catalog;
pub mod connection;
pub mod curvature;
pub mod dsl;
pub mod error;
pub mod finsler;
pub mod gauge;
pub mod jet;
pub mod linalg;
pub mod ncalg;
pub mod sampling;
pub mod spectral;

pub use bundle::{BundleField, DMetricField, GeometryJets, GeometrySource, NConnectionField};
pub use catalog::Geometry;
pub use connection::ConnectionSelector;
pub use dsl::{parse_field, BundleShape, ScalarField};
pub use error::{Error, Result};
pub use jet::Jet;
pub use sampling::{sample_points, SampleSpec};
