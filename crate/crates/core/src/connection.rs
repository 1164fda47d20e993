//! Distinguished linear connections in the adapted basis.
//!
//! `gamma[[α, β, γ]] = Γ^α_{βγ}` with `D_{δ_γ} δ_β = Γ^α_{βγ} δ_α`. For a
//! d-connection the only nonzero blocks are `L^i_{jk}`, `L^a_{bk}`, `C^i_{jc}`
//! and `C^a_{bc}`.

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use crate::bundle::{GeometryJets, GeometrySource};
use crate::dsl::{BundleShape, ScalarField};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::linalg;

/// Which connection to build from the metric and N-connection.
#[derive(Debug, Clone)]
pub enum ConnectionSelector {
    Canonical,
    LeviCivita,
    /// Coefficients given directly as fields, `Γ^α_{βγ}`; missing entries are zero.
    User(UserConnection),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConnectionKind {
    Canonical,
    LeviCivita,
    User,
}

impl ConnectionSelector {
    pub fn kind(&self) -> ConnectionKind {
        match self {
            ConnectionSelector::Canonical => ConnectionKind::Canonical,
            ConnectionSelector::LeviCivita => ConnectionKind::LeviCivita,
            ConnectionSelector::User(_) => ConnectionKind::User,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UserConnection {
    pub shape: BundleShape,
    coeffs: Array3<Option<ScalarField>>,
}

impl UserConnection {
    pub fn new(shape: BundleShape) -> Self {
        let d = shape.dim();
        UserConnection {
            shape,
            coeffs: Array3::from_elem((d, d, d), None),
        }
    }

    pub fn set(&mut self, upper: usize, left: usize, right: usize, f: ScalarField) -> Result<()> {
        let d = self.shape.dim();
        if upper >= d || left >= d || right >= d {
            return Err(Error::Shape(format!(
                "connection index ({upper}, {left}, {right}) outside dimension {d}"
            )));
        }
        self.coeffs[[upper, left, right]] = Some(f);
        Ok(())
    }

    fn jets(&self, u: &[f64], order: usize) -> Result<Array3<Jet>> {
        let d = self.shape.dim();
        let coords = Jet::seed(u, order);
        let mut out = Array3::from_elem((d, d, d), Jet::zero(d, order));
        for ((a, b, c), f) in self.coeffs.indexed_iter() {
            if let Some(f) = f {
                out[[a, b, c]] = f.eval_on(&coords)?;
            }
        }
        Ok(out)
    }
}

/// The four d-connection families at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct DConnectionPoint {
    /// `L^i_{jk}`.
    pub l_hh: Array3<f64>,
    /// `L^a_{bk}`.
    pub l_vv_h: Array3<f64>,
    /// `C^i_{jc}`.
    pub c_hh_v: Array3<f64>,
    /// `C^a_{bc}`.
    pub c_vv_v: Array3<f64>,
}

impl DConnectionPoint {
    pub fn from_assembled(shape: BundleShape, gamma: &Array3<f64>) -> Self {
        let (n, m) = (shape.n, shape.m);
        DConnectionPoint {
            l_hh: Array3::from_shape_fn((n, n, n), |(i, j, k)| gamma[[i, j, k]]),
            l_vv_h: Array3::from_shape_fn((m, m, n), |(a, b, k)| gamma[[n + a, n + b, k]]),
            c_hh_v: Array3::from_shape_fn((n, n, m), |(i, j, c)| gamma[[i, j, n + c]]),
            c_vv_v: Array3::from_shape_fn((m, m, m), |(a, b, c)| gamma[[n + a, n + b, n + c]]),
        }
    }

    /// Reassembles the full `Γ^α_{βγ}` with zero mixed blocks.
    pub fn assemble(&self) -> Array3<f64> {
        let n = self.l_hh.dim().0;
        let m = self.c_vv_v.dim().0;
        let d = n + m;
        Array3::from_shape_fn((d, d, d), |(a, b, c)| match (a < n, b < n, c < n) {
            (true, true, true) => self.l_hh[[a, b, c]],
            (false, false, true) => self.l_vv_h[[a - n, b - n, c]],
            (true, true, false) => self.c_hh_v[[a, b, c - n]],
            (false, false, false) => self.c_vv_v[[a - n, b - n, c - n]],
            _ => 0.0,
        })
    }

    pub fn max_abs_difference(&self, other: &DConnectionPoint) -> f64 {
        let a = self.assemble();
        let b = other.assemble();
        a.iter()
            .zip(b.iter())
            .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
    }
}

/// `N^a_{bi} = ∂N_i^a/∂y^b`, stored `[[a, b, i]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NLinearPoint {
    pub gamma_n: Array3<f64>,
}

/// Canonical d-connection coefficients as jets one order below `geom`.
pub fn canonical_jets(geom: &GeometryJets) -> Result<Array3<Jet>> {
    build_jets(geom, false)
}

/// Levi-Civita connection in the adapted basis: canonical plus
/// `½ g^{ik} Ω^a_{jk} h_{ca}` on the `C^i_{jc}` block.
pub fn levi_civita_jets(geom: &GeometryJets) -> Result<Array3<Jet>> {
    build_jets(geom, true)
}

fn build_jets(geom: &GeometryJets, levi_civita: bool) -> Result<Array3<Jet>> {
    let shape = geom.shape;
    let (n, m, d) = (shape.n, shape.m, shape.dim());
    let order = geom.order();
    if order == 0 {
        return Err(Error::OrderOverflow {
            requested: 1,
            max: 0,
        });
    }
    let out_order = order - 1;
    let zero = Jet::zero(d, out_order);
    let ginv = linalg::inverse(&geom.g, "horizontal metric block")?;
    let hinv = linalg::inverse(&geom.h, "vertical metric block")?;

    // δ_k g_ij and δ_k h_ab for every direction
    let dg = Array3::from_shape_fn((d, n, n), |(k, i, j)| geom.delta(&geom.g[[i, j]], k));
    let dh = Array3::from_shape_fn((d, m, m), |(k, a, b)| geom.delta(&geom.h[[a, b]], k));
    // ∂_b N_k^a stored [[a, b, k]]
    let dn = Array3::from_shape_fn((m, m, n), |(a, b, k)| {
        geom.n[[a, k]].partial(shape.fiber(b))
    });
    let h = geom.h.mapv(|x| x.truncate(out_order));

    let mut gamma = Array3::from_elem((d, d, d), zero.clone());

    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut acc = zero.clone();
                for l in 0..n {
                    let bracket = &dg[[k, l, j]] + &dg[[j, l, k]] - &dg[[l, j, k]];
                    acc = acc + &ginv[[i, l]] * &bracket;
                }
                gamma[[i, j, k]] = acc.scale(0.5);
            }
        }
    }

    for a in 0..m {
        for b in 0..m {
            for k in 0..n {
                let mut acc = zero.clone();
                for c in 0..m {
                    let mut bracket = dh[[k, b, c]].clone();
                    for e in 0..m {
                        bracket = bracket
                            - &h[[e, c]] * &dn[[e, b, k]]
                            - &h[[e, b]] * &dn[[e, c, k]];
                    }
                    acc = acc + &hinv[[a, c]] * &bracket;
                }
                gamma[[n + a, n + b, k]] = &dn[[a, b, k]] + &acc.scale(0.5);
            }
        }
    }

    for i in 0..n {
        for j in 0..n {
            for c in 0..m {
                let mut acc = zero.clone();
                for k in 0..n {
                    acc = acc + &ginv[[i, k]] * &dg[[n + c, j, k]];
                }
                gamma[[i, j, n + c]] = acc.scale(0.5);
            }
        }
    }

    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                let mut acc = zero.clone();
                for e in 0..m {
                    let bracket = &dh[[n + c, e, b]] + &dh[[n + b, e, c]] - &dh[[n + e, b, c]];
                    acc = acc + &hinv[[a, e]] * &bracket;
                }
                gamma[[n + a, n + b, n + c]] = acc.scale(0.5);
            }
        }
    }

    if levi_civita {
        let omega = geom.n_curvature();
        for i in 0..n {
            for j in 0..n {
                for c in 0..m {
                    let mut acc = zero.clone();
                    for k in 0..n {
                        for a in 0..m {
                            acc = acc + &(&ginv[[i, k]] * &omega[[a, j, k]]) * &h[[c, a]];
                        }
                    }
                    gamma[[i, j, n + c]] = &gamma[[i, j, n + c]] + &acc.scale(0.5);
                }
            }
        }
    }
    Ok(gamma)
}

/// Connection jets for the selected connection, one order below `geom`.
pub fn connection_jets(
    geom: &GeometryJets,
    sel: &ConnectionSelector,
    u: &[f64],
) -> Result<Array3<Jet>> {
    match sel {
        ConnectionSelector::Canonical => canonical_jets(geom),
        ConnectionSelector::LeviCivita => levi_civita_jets(geom),
        ConnectionSelector::User(user) => {
            if user.shape != geom.shape {
                return Err(Error::Shape("user connection on a different chart".into()));
            }
            user.jets(u, geom.order().saturating_sub(1))
        }
    }
}

fn point(src: &dyn GeometrySource, sel: &ConnectionSelector, u: &[f64]) -> Result<DConnectionPoint> {
    let geom = src.geometry(u, 1)?;
    let gamma = connection_jets(&geom, sel, u)?;
    Ok(DConnectionPoint::from_assembled(
        geom.shape,
        &gamma.mapv(|j| j.value()),
    ))
}

pub fn canonical_dconnection(src: &dyn GeometrySource, u: &[f64]) -> Result<DConnectionPoint> {
    point(src, &ConnectionSelector::Canonical, u)
}

pub fn levi_civita_anholonomic(src: &dyn GeometrySource, u: &[f64]) -> Result<DConnectionPoint> {
    point(src, &ConnectionSelector::LeviCivita, u)
}

pub fn dconnection(
    src: &dyn GeometrySource,
    sel: &ConnectionSelector,
    u: &[f64],
) -> Result<DConnectionPoint> {
    point(src, sel, u)
}

pub fn n_linear_connection(src: &dyn GeometrySource, u: &[f64]) -> Result<NLinearPoint> {
    let geom = src.geometry(u, 1)?;
    let shape = geom.shape;
    Ok(NLinearPoint {
        gamma_n: Array3::from_shape_fn((shape.m, shape.m, shape.n), |(a, b, i)| {
            geom.n[[a, i]].gradient(shape.fiber(b))
        }),
    })
}

/// `D_γ G_{αβ} = δ_γ G_{αβ} − Γ^τ_{αγ} G_{τβ} − Γ^τ_{βγ} G_{ατ}` over the
/// block metric, as jets.
pub fn metricity_jets(geom: &GeometryJets, gamma: &Array3<Jet>) -> Array3<Jet> {
    let d = geom.shape.dim();
    let big = geom.block_metric();
    let order = gamma[[0, 0, 0]].order();
    let bigt: Array2<Jet> = big.mapv(|x| x.truncate(order));
    Array3::from_shape_fn((d, d, d), |(c, a, b)| {
        let mut acc = geom.delta(&big[[a, b]], c);
        for t in 0..d {
            acc = acc - &gamma[[t, a, c]] * &bigt[[t, b]] - &gamma[[t, b, c]] * &bigt[[a, t]];
        }
        acc
    })
}

/// Max `|D_γ g_{αβ}|` for a connection given by its point values.
pub fn metric_compatibility_residual(
    conn: &DConnectionPoint,
    src: &dyn GeometrySource,
    u: &[f64],
) -> Result<f64> {
    let geom = src.geometry(u, 1)?;
    let d = geom.shape.dim();
    let gamma = conn
        .assemble()
        .mapv(|v| Jet::constant(d, 0, v));
    Ok(metricity_jets(&geom, &gamma)
        .iter()
        .fold(0.0, |m, j| m.max(j.value().abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{BundleField, DMetricField, NConnectionField, SymmetricFields};
    use crate::dsl::parse_field;

    fn flat(shape: BundleShape) -> BundleField {
        BundleField::new(
            DMetricField::new(
                shape,
                SymmetricFields::identity(shape.n, shape),
                SymmetricFields::identity(shape.m, shape),
            )
            .unwrap(),
            NConnectionField::zero(shape),
        )
        .unwrap()
    }

    #[test]
    fn flat_has_zero_connection() {
        let s = BundleShape::new(2, 2).unwrap();
        let b = flat(s);
        let c = canonical_dconnection(&b, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!(c.assemble().iter().all(|x| *x == 0.0));
        let r = metric_compatibility_residual(&c, &b, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn y_linear_n_gives_constant_linear_connection() {
        let s = BundleShape::new(1, 2).unwrap();
        let f = |src: &str| parse_field(src, s).unwrap();
        let nc = NConnectionField::new(s, vec![vec![f("2*y1 - y2")], vec![f("3*y2")]]).unwrap();
        let mut b = flat(s);
        b.nconn = nc;
        let p = n_linear_connection(&b, &[0.4, 1.0, -2.0]).unwrap();
        assert_eq!(p.gamma_n[[0, 0, 0]], 2.0);
        assert_eq!(p.gamma_n[[0, 1, 0]], -1.0);
        assert_eq!(p.gamma_n[[1, 0, 0]], 0.0);
        assert_eq!(p.gamma_n[[1, 1, 0]], 3.0);
    }

    #[test]
    fn perturbed_connection_breaks_metricity() {
        let s = BundleShape::new(2, 1).unwrap();
        let b = flat(s);
        let u = [0.3, 0.1, 0.5];
        let mut c = canonical_dconnection(&b, &u).unwrap();
        c.l_hh[[0, 1, 0]] += 0.1;
        assert!(metric_compatibility_residual(&c, &b, &u).unwrap() >= 0.01);
    }
}
