//! Coupling of the de Sitter gauge field to bundle geometry: the potential
//! built from a d-connection and vielbein, its field strength compared with
//! the d-curvature, and the gravitational Lagrangian density.

use nalgebra::DMatrix;
use ndarray::{Array2, Array3, Array4};
use serde::{Deserialize, Serialize};

use crate::bundle::GeometrySource;
use crate::connection::ConnectionSelector;
use crate::curvature::{ricci_jets, scalar_jet, LocalGeometry};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::linalg;
use crate::spectral::{frame_connection_jets, vielbein_jets};

use super::algebra::{DeSitterAlgebra, Generator};
use super::sw::{adapted_curvature_jets, GaugeConstants};

/// Field strength of the potential `[[Γ^ā_{b̄μ}, l0⁻¹ χ^ā_μ], [l0⁻¹ χ_{b̄μ}, 0]]`
/// against the frame d-curvature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureBridge {
    /// Potential components `q_{μ,a}` in the algebra basis.
    pub potential: Array2<f64>,
    /// Rotation block of the field strength, `[[ā, b̄, τ, μ]]`.
    pub rotation_block: Array4<f64>,
    /// `e^ā_α R^α_{β μ τ} E^β_b̄ + l0⁻² (χ^ā_τ χ_{b̄μ} − χ^ā_μ χ_{b̄τ})`.
    pub expected: Array4<f64>,
    pub residual: f64,
}

fn check_dim4(src: &dyn GeometrySource) -> Result<()> {
    let d = src.shape().dim();
    if d != 4 {
        return Err(Error::Shape(format!(
            "the de Sitter gauge field lives on a four-dimensional chart, got {d}"
        )));
    }
    Ok(())
}

/// Potential jets `q_{μ,a}` (order 1) built from the frame connection and
/// vielbein of a geometry.
pub fn geometric_potential(
    src: &dyn GeometrySource,
    sel: &ConnectionSelector,
    alg: &DeSitterAlgebra,
    l0: f64,
    u: &[f64],
) -> Result<(Array2<Jet>, LocalGeometry, Array2<Jet>, Array2<Jet>)> {
    check_dim4(src)?;
    let local = LocalGeometry::new(src, sel, u, 2)?;
    let (e, e_inv) = vielbein_jets(&local.geom)?;
    let frame = frame_connection_jets(&local, &e, &e_inv);
    let q = Array2::from_shape_fn((4, alg.dim()), |(mu, a)| match alg.labels[a] {
        // coefficient of M_{αβ} is the (β, α) entry of the frame matrix
        Generator::F(al, be) => frame[[be, al, mu]].clone(),
        // M_{α5} = −l P_α
        Generator::P(al) => e[[mu, al]].truncate(1) * (-alg.l / l0),
    });
    Ok((q, local, e, e_inv))
}

pub fn curvature_bridge(
    src: &dyn GeometrySource,
    sel: &ConnectionSelector,
    alg: &DeSitterAlgebra,
    l0: f64,
    u: &[f64],
) -> Result<CurvatureBridge> {
    let (q, local, e, e_inv) = geometric_potential(src, sel, alg, l0, u)?;
    let r1 = adapted_curvature_jets(&q, &local.geom, &alg.structure).mapv(|j| j.value());
    let curv = local.curvature()?.mapv(|j| j.value());
    let e = linalg::values(&e);
    let e_inv = linalg::values(&e_inv);
    let eta = alg.eta;
    let mut rotation_block = Array4::zeros((4, 4, 4, 4));
    for t in 0..4 {
        for m in 0..4 {
            let mut coeffs = vec![0.0; alg.dim()];
            for (a, lab) in alg.labels.iter().enumerate() {
                if matches!(lab, Generator::F(..)) {
                    coeffs[a] = r1[[t, m, a]];
                }
            }
            let mat = alg.combine(&coeffs);
            for a in 0..4 {
                for b in 0..4 {
                    rotation_block[[a, b, t, m]] = mat[(a, b)];
                }
            }
        }
    }
    let expected = Array4::from_shape_fn((4, 4, 4, 4), |(a, b, t, m)| {
        let mut acc = 0.0;
        for al in 0..4 {
            for be in 0..4 {
                acc += e[(al, a)] * curv[[al, be, m, t]] * e_inv[(be, b)];
            }
        }
        acc + (e[(t, a)] * eta[b] * e[(m, b)] - e[(m, a)] * eta[b] * e[(t, b)]) / (l0 * l0)
    });
    let residual = (&rotation_block - &expected).iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    Ok(CurvatureBridge {
        potential: q.mapv(|j| j.value()),
        rotation_block,
        expected,
        residual,
    })
}

/// Frame-indexed gravitational fields at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeGravityPoint {
    /// `χ^ā_μ`, rows `μ`, columns `ā`.
    pub chi: DMatrix<f64>,
    /// `T^ā_{μν}`.
    pub torsion: Array3<f64>,
    /// `R^ā_{b̄μν}`.
    pub curvature: Array4<f64>,
    /// Scalar curvature.
    pub scalar: f64,
    /// Signature of the flat index.
    pub eta: [f64; 4],
}

impl GaugeGravityPoint {
    /// `G_{μν} = η_ā χ^ā_μ χ^ā_ν`.
    pub fn metric(&self) -> DMatrix<f64> {
        let d = self.chi.nrows();
        DMatrix::from_fn(d, d, |m, n| (0..d).map(|a| self.eta[a] * self.chi[(m, a)] * self.chi[(n, a)]).sum())
    }

    /// Rotates the flat index by `o`: `χ → χ oᵀ`, `T → o T`, `R → o R oᵀ`.
    pub fn rotated(&self, o: &DMatrix<f64>) -> GaugeGravityPoint {
        let d = self.chi.nrows();
        let torsion = Array3::from_shape_fn((d, d, d), |(a, m, n)| {
            (0..d).map(|b| o[(a, b)] * self.torsion[[b, m, n]]).sum()
        });
        let curvature = Array4::from_shape_fn((d, d, d, d), |(a, b, m, n)| {
            let mut acc = 0.0;
            for c in 0..d {
                for e in 0..d {
                    acc += o[(a, c)] * self.curvature[[c, e, m, n]] * o[(b, e)];
                }
            }
            acc
        });
        GaugeGravityPoint {
            chi: &self.chi * o.transpose(),
            torsion,
            curvature,
            scalar: self.scalar,
            eta: self.eta,
        }
    }
}

/// Frame fields of a four-dimensional geometry at `u` with Euclidean frame.
pub fn gauge_gravity_point(src: &dyn GeometrySource, sel: &ConnectionSelector, u: &[f64]) -> Result<GaugeGravityPoint> {
    check_dim4(src)?;
    let local = LocalGeometry::new(src, sel, u, 2)?;
    let (e, _) = vielbein_jets(&local.geom)?;
    let chi = linalg::values(&e);
    let torsion = local.torsion().mapv(|j| j.value());
    let curv = local.curvature()?;
    let ricci = ricci_jets(&curv);
    let geom0 = src.geometry(u, 0)?;
    let scalar = scalar_jet(&geom0, &ricci)?.value();
    let curv = curv.mapv(|j| j.value());
    let frame_t = Array3::from_shape_fn((4, 4, 4), |(a, m, n)| (0..4).map(|al| chi[(al, a)] * torsion[[al, m, n]]).sum());
    let e_inv = linalg::checked_inverse(&chi, "vielbein")?.transpose();
    let frame_r = Array4::from_shape_fn((4, 4, 4, 4), |(a, b, m, n)| {
        let mut acc = 0.0;
        for al in 0..4 {
            for be in 0..4 {
                acc += chi[(al, a)] * curv[[al, be, m, n]] * e_inv[(be, b)];
            }
        }
        acc
    });
    Ok(GaugeGravityPoint {
        chi,
        torsion: frame_t,
        curvature: frame_r,
        scalar,
        eta: [1.0; 4],
    })
}

/// Contributions of the gravitational Lagrangian density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LagrangianTerms {
    pub torsion_term: f64,
    pub curvature_term: f64,
    pub scalar_term: f64,
    pub volume: f64,
    /// `(torsion + curvature + scalar) · volume`.
    pub density: f64,
}

/// `[(1/2l²) T^ā_{μν} T_ā^{μν} + (1/8λ) R^ā_{b̄μν} R^b̄_ā^{μν} − (1/l²)(R − 2λ1)] √|G|`.
pub fn lagrangian_density(p: &GaugeGravityPoint, c: &GaugeConstants) -> Result<LagrangianTerms> {
    let g = p.metric();
    let ginv = linalg::checked_inverse(&g, "gauge metric")?;
    let d = g.nrows();
    let raise2 = |x: &dyn Fn(usize, usize) -> f64, y: &dyn Fn(usize, usize) -> f64| {
        let mut acc = 0.0;
        for m in 0..d {
            for n in 0..d {
                let xv = x(m, n);
                if xv == 0.0 {
                    continue;
                }
                for m2 in 0..d {
                    for n2 in 0..d {
                        acc += xv * y(m2, n2) * ginv[(m, m2)] * ginv[(n, n2)];
                    }
                }
            }
        }
        acc
    };
    let mut t2 = 0.0;
    for a in 0..d {
        t2 += p.eta[a] * raise2(&|m, n| p.torsion[[a, m, n]], &|m, n| p.torsion[[a, m, n]]);
    }
    let mut r2 = 0.0;
    for a in 0..d {
        for b in 0..d {
            r2 += raise2(&|m, n| p.curvature[[a, b, m, n]], &|m, n| p.curvature[[b, a, m, n]]);
        }
    }
    let l2 = c.l_squared();
    let torsion_term = t2 / (2.0 * l2);
    let curvature_term = r2 / (8.0 * c.lambda);
    let scalar_term = -(p.scalar - 2.0 * c.lambda1()) / l2;
    let volume = g.determinant().abs().sqrt();
    Ok(LagrangianTerms {
        torsion_term,
        curvature_term,
        scalar_term,
        volume,
        density: (torsion_term + curvature_term + scalar_term) * volume,
    })
}

/// `¼ tr(R_{τλ} R^{τλ})` in a matrix representation, for field-strength
/// components `R_{τλ,a}` and inverse metric `G^{μν}`.
pub fn field_strength_density(r: &Array3<f64>, ginv: &DMatrix<f64>, generators: &[DMatrix<f64>]) -> f64 {
    let d = r.dim().0;
    let mats: Vec<Vec<DMatrix<f64>>> = (0..d)
        .map(|t| {
            (0..d)
                .map(|l| {
                    let mut m = DMatrix::zeros(generators[0].nrows(), generators[0].ncols());
                    for (a, g) in generators.iter().enumerate() {
                        m += g * r[[t, l, a]];
                    }
                    m
                })
                .collect()
        })
        .collect();
    let mut acc = 0.0;
    for t in 0..d {
        for l in 0..d {
            for t2 in 0..d {
                for l2 in 0..d {
                    let w = ginv[(t, t2)] * ginv[(l, l2)];
                    if w != 0.0 {
                        acc += w * (&mats[t][l] * &mats[t2][l2]).trace();
                    }
                }
            }
        }
    }
    0.25 * acc
}
