//! de Sitter gauge gravity and its first-order Seiberg–Witten deformation.

pub mod algebra;
pub mod bridge;
pub mod envelope;
pub mod potential;
pub mod sw;

pub use algebra::{DeSitterAlgebra, Generator, DEFAULT_ETA, LORENTZIAN_ETA};
pub use bridge::{
    curvature_bridge, gauge_gravity_point, lagrangian_density, CurvatureBridge, GaugeGravityPoint, LagrangianTerms,
};
pub use envelope::{closure_check, covariance_check, sw_residual, sw_residual_scaling, ScalingReport};
pub use potential::{nonlinear_potential, NonlinearGaugeFields, NonlinearPotential};
pub use sw::{
    corrected_curvature, gauge_curvature, gauge_variation, sw_expand, CorrectedCurvature, GaugeConstants,
    GaugeLevel1, GaugeLevel2,
};
