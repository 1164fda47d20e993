//! Builtin example geometries.
//!
//! | id | shape | content |
//! |----|-------|---------|
//! | `flat[:n,m]` | (2,2) | identity blocks, `N = 0` |
//! | `sphere2xflat[:r[,m]]` | (2,2) | round 2-sphere of radius `r` (latitude chart) times flat fiber |
//! | `anisotropic` | (2,2) | off-diagonal, y-dependent blocks and an N-connection with `Ω ≠ 0` |
//! | `puregauge` | (2,2) | the anisotropic blocks with `N_i^a = ∂_i φ^a(x)`, so `Ω = 0` |
//! | `finsler:<id>` | (2,2) | metric and Cartan N generated by a builtin Finsler function |

use crate::bundle::{
    BundleField, DMetricField, GeometryJets, GeometrySource, NConnectionField, SymmetricFields,
};
use crate::dsl::{parse_field, BundleShape, ScalarField};
use crate::error::{Error, Result};
use crate::finsler::{self, FinslerGeometry};

/// A geometry given either by explicit fields or generated from a Finsler
/// function.
#[derive(Debug, Clone)]
pub enum Geometry {
    Field(BundleField),
    Finsler(FinslerGeometry),
}

impl GeometrySource for Geometry {
    fn shape(&self) -> BundleShape {
        match self {
            Geometry::Field(b) => b.shape(),
            Geometry::Finsler(f) => f.shape(),
        }
    }

    fn max_order(&self) -> usize {
        match self {
            Geometry::Field(b) => b.max_order(),
            Geometry::Finsler(f) => f.max_order(),
        }
    }

    fn geometry(&self, u: &[f64], order: usize) -> Result<GeometryJets> {
        match self {
            Geometry::Field(b) => b.geometry(u, order),
            Geometry::Finsler(f) => f.geometry(u, order),
        }
    }
}

impl Geometry {
    /// True when the chart must avoid the zero section of the fiber.
    pub fn needs_nonzero_fiber(&self) -> bool {
        matches!(self, Geometry::Finsler(_))
    }
}

/// Identifiers accepted by [`builtin`] without parameters.
pub const BUILTIN_IDS: [&str; 5] = ["flat", "sphere2xflat", "anisotropic", "puregauge", "finsler:randers"];

pub fn builtin(id: &str) -> Result<Geometry> {
    let (name, args) = match id.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (id, None),
    };
    match name {
        "flat" => {
            let (n, m) = match args {
                None => (2, 2),
                Some(a) => {
                    let v = parse_numbers(a, id)?;
                    if v.len() != 2 {
                        return Err(Error::Invalid(format!("flat:<n>,<m> expected, got `{id}`")));
                    }
                    (v[0] as usize, v[1] as usize)
                }
            };
            Ok(Geometry::Field(flat(BundleShape::new(n, m)?)))
        }
        "sphere2xflat" => {
            let (r, m) = match args {
                None => (1.0, 2),
                Some(a) => {
                    let v = parse_numbers(a, id)?;
                    match v.as_slice() {
                        [r] => (*r, 2),
                        [r, m] => (*r, *m as usize),
                        _ => {
                            return Err(Error::Invalid(format!(
                                "sphere2xflat:<r>[,<m>] expected, got `{id}`"
                            )))
                        }
                    }
                }
            };
            if r <= 0.0 {
                return Err(Error::Invalid(format!("sphere radius must be positive, got {r}")));
            }
            Ok(Geometry::Field(sphere_times_flat(r, m)?))
        }
        "anisotropic" if args.is_none() => Ok(Geometry::Field(anisotropic()?)),
        "puregauge" if args.is_none() => Ok(Geometry::Field(pure_gauge()?)),
        "finsler" => {
            let f = finsler::builtin(args.unwrap_or("randers"))?;
            Ok(Geometry::Finsler(FinslerGeometry::from_finsler(f)))
        }
        _ => Err(Error::Invalid(format!("unknown builtin geometry `{id}`"))),
    }
}

fn parse_numbers(args: &str, id: &str) -> Result<Vec<f64>> {
    args.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Invalid(format!("bad numeric parameter `{s}` in `{id}`")))
        })
        .collect()
}

pub fn flat(shape: BundleShape) -> BundleField {
    BundleField::new(
        DMetricField::new(
            shape,
            SymmetricFields::identity(shape.n, shape),
            SymmetricFields::identity(shape.m, shape),
        )
        .expect("identity blocks fit"),
        NConnectionField::zero(shape),
    )
    .expect("shapes agree")
}

/// `g = diag(r², r² cos² x1)` in latitude `x1` and longitude `x2`, `h = I_m`.
pub fn sphere_times_flat(r: f64, m: usize) -> Result<BundleField> {
    let shape = BundleShape::new(2, m)?;
    let g = SymmetricFields::diagonal(vec![
        parse_field(&format!("{r:?}^2"), shape)?,
        parse_field(&format!("{r:?}^2*cos(x1)^2"), shape)?,
    ]);
    BundleField::new(
        DMetricField::new(shape, g, SymmetricFields::identity(m, shape))?,
        NConnectionField::zero(shape),
    )
}

fn fields(shape: BundleShape, src: &[&str]) -> Result<Vec<ScalarField>> {
    src.iter().map(|s| parse_field(s, shape)).collect()
}

fn anisotropic_metric(shape: BundleShape) -> Result<DMetricField> {
    let g = SymmetricFields::from_upper(
        2,
        fields(shape, &["1 + 0.3*y1^2", "0.1*x2*y2", "1 + 0.2*x1^2 + 0.1*y2^2"])?,
    )?;
    let h = SymmetricFields::from_upper(
        2,
        fields(shape, &["1 + 0.2*x1^2", "0.1*y1*x2", "1 + 0.1*y2^2 + 0.1*x1*x2"])?,
    )?;
    DMetricField::new(shape, g, h)
}

/// Off-diagonal, y-dependent metric with a non-integrable N-connection.
pub fn anisotropic() -> Result<BundleField> {
    let shape = BundleShape::new(2, 2)?;
    let nc = NConnectionField::new(
        shape,
        vec![
            fields(shape, &["0.2*x2*y1", "0.3*y2*x1^2"])?,
            fields(shape, &["0.1*sin(x1)*y2", "0.2*y1*y2"])?,
        ],
    )?;
    BundleField::new(anisotropic_metric(shape)?, nc)
}

/// The anisotropic blocks with `N_i^a = ∂_i φ^a` for `φ = (x1 x2, sin x1 + x2²)`.
pub fn pure_gauge() -> Result<BundleField> {
    let shape = BundleShape::new(2, 2)?;
    let nc = NConnectionField::new(
        shape,
        vec![
            fields(shape, &["x2", "x1"])?,
            fields(shape, &["cos(x1)", "2*x2"])?,
        ],
    )?;
    BundleField::new(anisotropic_metric(shape)?, nc)
}
