//! Torsion, curvature, Ricci splits and Einstein residuals of a d-connection.
//!
//! `T^α_{βγ} = Γ^α_{βγ} − Γ^α_{γβ} + W^α_{βγ}` and
//! `R^α_{βγτ} = δ_τ Γ^α_{βγ} − δ_γ Γ^α_{βτ} + Γ^φ_{βγ} Γ^α_{φτ}
//!  − Γ^φ_{βτ} Γ^α_{φγ} + Γ^α_{βφ} W^φ_{γτ}`, stored `[[α, β, γ, τ]]`.

use nalgebra::DMatrix;
use ndarray::{Array2, Array3, Array4};
use serde::{Deserialize, Serialize};

use crate::bundle::{GeometryJets, GeometrySource};
use crate::connection::{connection_jets, ConnectionSelector};
use crate::dsl::BundleShape;
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::linalg;

/// Metric, connection and anholonomy jets at one point.
#[derive(Debug, Clone)]
pub struct LocalGeometry {
    pub geom: GeometryJets,
    /// `Γ^α_{βγ}`, one order below `geom`.
    pub gamma: Array3<Jet>,
    /// `W^γ_{αβ}`, one order below `geom`.
    pub w: Array3<Jet>,
}

impl LocalGeometry {
    /// Builds the connection at `u` with metric jets of the given order
    /// (at least 1; curvature needs 2, derivatives of curvature need more).
    pub fn new(
        src: &dyn GeometrySource,
        sel: &ConnectionSelector,
        u: &[f64],
        order: usize,
    ) -> Result<Self> {
        if order == 0 {
            return Err(Error::Invalid("connection needs metric jets of order ≥ 1".into()));
        }
        let geom = src.geometry(u, order)?;
        let gamma = connection_jets(&geom, sel, u)?;
        let w = geom.anholonomy();
        Ok(LocalGeometry { geom, gamma, w })
    }

    pub fn shape(&self) -> BundleShape {
        self.geom.shape
    }

    pub fn torsion(&self) -> Array3<Jet> {
        let d = self.shape().dim();
        Array3::from_shape_fn((d, d, d), |(a, b, c)| {
            &self.gamma[[a, b, c]] - &self.gamma[[a, c, b]] + &self.w[[a, b, c]]
        })
    }

    /// Full curvature tensor, two orders below `geom`.
    pub fn curvature(&self) -> Result<Array4<Jet>> {
        let d = self.shape().dim();
        let order = self.gamma[[0, 0, 0]].order();
        if order == 0 {
            return Err(Error::Invalid("curvature needs metric jets of order ≥ 2".into()));
        }
        let out = order - 1;
        let dgamma = Array4::from_shape_fn((d, d, d, d), |(t, a, b, c)| {
            self.geom.delta(&self.gamma[[a, b, c]], t)
        });
        Ok(Array4::from_shape_fn((d, d, d, d), |(a, b, c, t)| {
            let mut acc = &dgamma[[t, a, b, c]] - &dgamma[[c, a, b, t]];
            for f in 0..d {
                acc = acc + &self.gamma[[f, b, c]] * &self.gamma[[a, f, t]]
                    - &self.gamma[[f, b, t]] * &self.gamma[[a, f, c]]
                    + &self.gamma[[a, b, f]] * &self.w[[f, c, t]];
            }
            debug_assert_eq!(acc.order(), out);
            acc
        }))
    }
}

/// Ricci tensor `R_{βγ} = R^α_{βγα}`.
pub fn ricci_jets(riemann: &Array4<Jet>) -> Array2<Jet> {
    let d = riemann.dim().0;
    Array2::from_shape_fn((d, d), |(b, c)| {
        let mut acc = riemann[[0, b, c, 0]].clone();
        for a in 1..d {
            acc = acc + &riemann[[a, b, c, a]];
        }
        acc
    })
}

/// Scalar curvature `G^{βγ} R_{βγ}` for the block metric.
pub fn scalar_jet(geom: &GeometryJets, ricci: &Array2<Jet>) -> Result<Jet> {
    let ginv = linalg::inverse(&geom.block_metric(), "block metric")?;
    let d = ricci.dim().0;
    let mut acc = Jet::zero(d, ricci[[0, 0]].order());
    for b in 0..d {
        for c in 0..d {
            acc = acc + &ginv[[b, c]] * &ricci[[b, c]];
        }
    }
    Ok(acc)
}

/// The five torsion families plus the assembled tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TorsionPoint {
    pub shape: BundleShape,
    /// `T^i_{jk}`.
    pub t_hh: Array3<f64>,
    /// `T^i_{ja} = C^i_{ja}` block of the assembled tensor.
    pub t_h_hv: Array3<f64>,
    /// `S^a_{bc}`.
    pub s_vv: Array3<f64>,
    /// `T^a_{ij}`.
    pub t_v_hh: Array3<f64>,
    /// `T^a_{bi}`.
    pub t_v_vh: Array3<f64>,
    pub full: Array3<f64>,
}

impl TorsionPoint {
    pub fn from_full(shape: BundleShape, full: Array3<f64>) -> Self {
        let (n, m) = (shape.n, shape.m);
        TorsionPoint {
            shape,
            t_hh: Array3::from_shape_fn((n, n, n), |(i, j, k)| full[[i, j, k]]),
            t_h_hv: Array3::from_shape_fn((n, n, m), |(i, j, a)| full[[i, j, n + a]]),
            s_vv: Array3::from_shape_fn((m, m, m), |(a, b, c)| full[[n + a, n + b, n + c]]),
            t_v_hh: Array3::from_shape_fn((m, n, n), |(a, i, j)| full[[n + a, i, j]]),
            t_v_vh: Array3::from_shape_fn((m, m, n), |(a, b, i)| full[[n + a, n + b, i]]),
            full,
        }
    }

    /// Rebuilds the full tensor from the five families using antisymmetry in
    /// the lower pair; blocks not covered by a family are zero for a
    /// d-connection.
    pub fn reassemble(&self) -> Array3<f64> {
        let (n, m) = (self.shape.n, self.shape.m);
        let d = n + m;
        let mut t = Array3::zeros((d, d, d));
        for ((i, j, k), v) in self.t_hh.indexed_iter() {
            t[[i, j, k]] = *v;
        }
        for ((i, j, a), v) in self.t_h_hv.indexed_iter() {
            t[[i, j, n + a]] = *v;
            t[[i, n + a, j]] = -*v;
        }
        for ((a, b, c), v) in self.s_vv.indexed_iter() {
            t[[n + a, n + b, n + c]] = *v;
        }
        for ((a, i, j), v) in self.t_v_hh.indexed_iter() {
            t[[n + a, i, j]] = *v;
        }
        for ((a, b, i), v) in self.t_v_vh.indexed_iter() {
            t[[n + a, n + b, i]] = *v;
            t[[n + a, i, n + b]] = -*v;
        }
        t
    }

    /// Largest `|T^α_{βγ} + T^α_{γβ}|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let d = self.shape.dim();
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    worst = worst.max((self.full[[a, b, c]] + self.full[[a, c, b]]).abs());
                }
            }
        }
        worst
    }
}

/// The six curvature families plus the assembled tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvaturePoint {
    pub shape: BundleShape,
    /// `R^i_{h.jk}` as `[[i, h, j, k]]`.
    pub r_h: Array4<f64>,
    /// `R^a_{b.jk}`.
    pub r_v: Array4<f64>,
    /// `P^i_{j.ka}`.
    pub p_h: Array4<f64>,
    /// `P^c_{b.ka}`.
    pub p_v: Array4<f64>,
    /// `S^i_{j.bc}`.
    pub s_h: Array4<f64>,
    /// `S^a_{b.cd}`.
    pub s_v: Array4<f64>,
    pub full: Array4<f64>,
}

impl CurvaturePoint {
    pub fn from_full(shape: BundleShape, full: Array4<f64>) -> Self {
        let (n, m) = (shape.n, shape.m);
        let block = |sizes: (usize, usize, usize, usize), offs: [usize; 4]| {
            Array4::from_shape_fn(sizes, |(a, b, c, t)| {
                full[[a + offs[0], b + offs[1], c + offs[2], t + offs[3]]]
            })
        };
        CurvaturePoint {
            shape,
            r_h: block((n, n, n, n), [0, 0, 0, 0]),
            r_v: block((m, m, n, n), [n, n, 0, 0]),
            p_h: block((n, n, n, m), [0, 0, 0, n]),
            p_v: block((m, m, n, m), [n, n, 0, n]),
            s_h: block((n, n, m, m), [0, 0, n, n]),
            s_v: block((m, m, m, m), [n, n, n, n]),
            full,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.full.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest `|R^α_{βγτ} + R^α_{βτγ}|`.
    pub fn antisymmetry_residual(&self) -> f64 {
        let d = self.shape.dim();
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for t in 0..d {
                        worst = worst
                            .max((self.full[[a, b, c, t]] + self.full[[a, b, t, c]]).abs());
                    }
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicciPoint {
    /// `R_ij`.
    pub r_hh: DMatrix<f64>,
    /// `²P_ia = P^k_{i.ka}`.
    pub p2: DMatrix<f64>,
    /// `¹P_ai = P^b_{a.ib}`.
    pub p1: DMatrix<f64>,
    /// `S_ab`.
    pub s_vv: DMatrix<f64>,
    /// `g^{ij} R_ij`.
    pub r_hat: f64,
    /// `h^{ab} S_ab`.
    pub s: f64,
    /// `R̂ + S`.
    pub total: f64,
}

impl RicciPoint {
    /// `max |¹P_ai − ²P_ia|`.
    pub fn mixed_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..self.p1.nrows() {
            for i in 0..self.p1.ncols() {
                worst = worst.max((self.p1[(a, i)] - self.p2[(i, a)]).abs());
            }
        }
        worst
    }

    pub fn max_mixed(&self) -> f64 {
        self.p1.amax().max(self.p2.amax())
    }
}

/// Source blocks `Υ` for the Einstein residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EinsteinSources {
    pub hh: DMatrix<f64>,
    pub vv: DMatrix<f64>,
    /// `Υ_ai`.
    pub vh: DMatrix<f64>,
    /// `Υ_ia`.
    pub hv: DMatrix<f64>,
}

impl EinsteinSources {
    pub fn vacuum(shape: BundleShape) -> Self {
        let (n, m) = (shape.n, shape.m);
        EinsteinSources {
            hh: DMatrix::zeros(n, n),
            vv: DMatrix::zeros(m, m),
            vh: DMatrix::zeros(m, n),
            hv: DMatrix::zeros(n, m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EinsteinReport {
    pub hh: DMatrix<f64>,
    pub vv: DMatrix<f64>,
    pub vh: DMatrix<f64>,
    pub hv: DMatrix<f64>,
    pub max_abs: f64,
}

pub fn torsion_point(local: &LocalGeometry) -> TorsionPoint {
    TorsionPoint::from_full(local.shape(), local.torsion().mapv(|j| j.value()))
}

pub fn d_torsion(
    src: &dyn GeometrySource,
    sel: &ConnectionSelector,
    u: &[f64],
) -> Result<TorsionPoint> {
    Ok(torsion_point(&LocalGeometry::new(src, sel, u, 1)?))
}

pub fn d_curvature(
    src: &dyn GeometrySource,
    sel: &ConnectionSelector,
    u: &[f64],
) -> Result<CurvaturePoint> {
    let local = LocalGeometry::new(src, sel, u, 2)?;
    Ok(CurvaturePoint::from_full(
        local.shape(),
        local.curvature()?.mapv(|j| j.value()),
    ))
}

/// Ricci splits and scalars from the curvature values and the metric at `u`.
pub fn ricci_scalar(
    curv: &CurvaturePoint,
    src: &dyn GeometrySource,
    u: &[f64],
) -> Result<RicciPoint> {
    let geom = src.geometry(u, 0)?;
    ricci_from_values(curv, &linalg::values(&geom.g), &linalg::values(&geom.h))
}

pub fn ricci_from_values(
    curv: &CurvaturePoint,
    g: &DMatrix<f64>,
    h: &DMatrix<f64>,
) -> Result<RicciPoint> {
    let (n, m) = (curv.shape.n, curv.shape.m);
    let r = &curv.full;
    let r_hh = DMatrix::from_fn(n, n, |i, j| (0..n).map(|k| r[[k, i, j, k]]).sum());
    let p2 = DMatrix::from_fn(n, m, |i, a| (0..n).map(|k| r[[k, i, k, n + a]]).sum());
    let p1 = DMatrix::from_fn(m, n, |a, i| (0..m).map(|b| r[[n + b, n + a, i, n + b]]).sum());
    let s_vv = DMatrix::from_fn(m, m, |a, b| (0..m).map(|c| r[[n + c, n + a, n + b, n + c]]).sum());
    let ginv = linalg::checked_inverse(g, "horizontal metric block")?;
    let hinv = linalg::checked_inverse(h, "vertical metric block")?;
    let r_hat = ginv.component_mul(&r_hh.transpose()).sum();
    let s = hinv.component_mul(&s_vv.transpose()).sum();
    Ok(RicciPoint {
        r_hh,
        p2,
        p1,
        s_vv,
        r_hat,
        s,
        total: r_hat + s,
    })
}

/// Residual blocks of the h–v Einstein equations with coupling `kappa`.
pub fn einstein_from_values(
    ricci: &RicciPoint,
    g: &DMatrix<f64>,
    h: &DMatrix<f64>,
    kappa: f64,
    sources: &EinsteinSources,
) -> EinsteinReport {
    let half = 0.5 * ricci.total;
    let hh = &ricci.r_hh - g * half - &sources.hh * kappa;
    let vv = &ricci.s_vv - h * half - &sources.vv * kappa;
    let vh = &ricci.p1 - &sources.vh * kappa;
    let hv = &ricci.p2 - &sources.hv * kappa;
    let max_abs = hh.amax().max(vv.amax()).max(vh.amax()).max(hv.amax());
    EinsteinReport {
        hh,
        vv,
        vh,
        hv,
        max_abs,
    }
}

pub fn einstein_residual(
    src: &dyn GeometrySource,
    sel: &ConnectionSelector,
    kappa: f64,
    sources: &EinsteinSources,
    u: &[f64],
) -> Result<EinsteinReport> {
    let curv = d_curvature(src, sel, u)?;
    let geom = src.geometry(u, 0)?;
    let g = linalg::values(&geom.g);
    let h = linalg::values(&geom.h);
    let ricci = ricci_from_values(&curv, &g, &h)?;
    Ok(einstein_from_values(&ricci, &g, &h, kappa, sources))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{BundleField, DMetricField, NConnectionField, SymmetricFields};
    use crate::dsl::parse_field;

    fn sphere(r: f64) -> BundleField {
        let s = BundleShape::new(2, 1).unwrap();
        let f = |src: String| parse_field(&src, s).unwrap();
        let g = SymmetricFields::diagonal(vec![
            f(format!("{r}^2")),
            f(format!("{r}^2*cos(x1)^2")),
        ]);
        BundleField::new(
            DMetricField::new(s, g, SymmetricFields::identity(1, s)).unwrap(),
            NConnectionField::zero(s),
        )
        .unwrap()
    }

    #[test]
    fn round_sphere_scalar_curvature() {
        for r in [1.0, 2.0, 0.5] {
            let b = sphere(r);
            let u = [0.3, -0.7, 0.4];
            let c = d_curvature(&b, &ConnectionSelector::Canonical, &u).unwrap();
            let ric = ricci_scalar(&c, &b, &u).unwrap();
            assert!((ric.r_hat - 2.0 / (r * r)).abs() < 1e-10, "{}", ric.r_hat);
            assert!(ric.s.abs() < 1e-14);
            assert!(c.antisymmetry_residual() < 1e-12);
        }
    }

    #[test]
    fn holonomic_levi_civita_is_torsion_free() {
        let b = sphere(1.3);
        let t = d_torsion(&b, &ConnectionSelector::LeviCivita, &[0.2, 0.1, 0.9]).unwrap();
        assert!(t.full.iter().all(|x| x.abs() < 1e-14));
    }

    #[test]
    fn vacuum_sources_with_einstein_blocks_cancel() {
        let b = sphere(1.7);
        let u = [0.4, 0.2, -0.1];
        let sel = ConnectionSelector::Canonical;
        let vac = einstein_residual(&b, &sel, 1.0, &EinsteinSources::vacuum(b.shape()), &u).unwrap();
        let kappa = 2.5;
        let src = EinsteinSources {
            hh: &vac.hh / kappa,
            vv: &vac.vv / kappa,
            vh: &vac.vh / kappa,
            hv: &vac.hv / kappa,
        };
        let rep = einstein_residual(&b, &sel, kappa, &src, &u).unwrap();
        assert!(rep.max_abs < 1e-14);
    }
}
