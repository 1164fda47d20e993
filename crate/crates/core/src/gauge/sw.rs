//! Pointwise gauge-field quantities: the field strength of a Lie-algebra
//! valued potential, its infinitesimal variation, and the first-order
//! Seiberg–Witten expansion with the θ-corrected field strength.
//!
//! Components refer to a real basis `T_a` with `[T_a, T_b] = f^{ab}_c T_c`;
//! in the Hermitian convention `I^a = i T_a` these are the same constants
//! as in `[I^a, I^b] = i f^{ab}_c I^c`.

use ndarray::{Array2, Array3, Array4};
use serde::{Deserialize, Serialize};

use crate::bundle::GeometryJets;
use crate::dsl::{BundleShape, ScalarField};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::ncalg::{LieStructure, ThetaMatrix};

/// `(1/2l²) T² + (1/8λ) R² − (1/l²)(R − 2λ1)` couplings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaugeConstants {
    pub l0: f64,
    pub lambda: f64,
}

impl GaugeConstants {
    pub fn new(l0: f64, lambda: f64) -> Result<Self> {
        if !(l0 > 0.0 && lambda > 0.0) || !l0.is_finite() || !lambda.is_finite() {
            return Err(Error::Invalid(format!(
                "gauge constants need l0 > 0 and λ > 0, got ({l0}, {lambda})"
            )));
        }
        Ok(GaugeConstants { l0, lambda })
    }

    /// `l² = 2 l0² λ`.
    pub fn l_squared(&self) -> f64 {
        2.0 * self.l0 * self.l0 * self.lambda
    }

    /// `λ1 = −3 / l0`.
    pub fn lambda1(&self) -> f64 {
        -3.0 / self.l0
    }

    /// Effective gravitational coupling `κ = l² / 2`, the inverse weight of
    /// the scalar-curvature term.
    pub fn kappa(&self) -> f64 {
        self.l_squared() / 2.0
    }
}

/// Level-one potential `q¹_{μ,a}` and gauge parameter `γ¹_a`.
#[derive(Debug, Clone)]
pub struct GaugeLevel1 {
    pub shape: BundleShape,
    /// `q1[μ][a]`.
    pub q1: Vec<Vec<ScalarField>>,
    /// `gamma1[a]`.
    pub gamma1: Vec<ScalarField>,
}

/// Jets of a level-one configuration at one point.
#[derive(Debug, Clone)]
pub struct Level1Jets {
    /// `[[μ, a]]`.
    pub q: Array2<Jet>,
    pub gamma: Vec<Jet>,
}

impl GaugeLevel1 {
    pub fn new(shape: BundleShape, q1: Vec<Vec<ScalarField>>, gamma1: Vec<ScalarField>) -> Result<Self> {
        let d = shape.dim();
        let s = gamma1.len();
        if q1.len() != d || q1.iter().any(|r| r.len() != s) {
            return Err(Error::Shape(format!(
                "gauge potential must be {d}×{s} to match the chart and the parameter"
            )));
        }
        Ok(GaugeLevel1 { shape, q1, gamma1 })
    }

    pub fn algebra_dim(&self) -> usize {
        self.gamma1.len()
    }

    pub fn jets(&self, u: &[f64], order: usize) -> Result<Level1Jets> {
        let d = self.shape.dim();
        let s = self.algebra_dim();
        let coords = Jet::seed(u, order);
        let mut q = Vec::with_capacity(d * s);
        for row in &self.q1 {
            for f in row {
                q.push(f.eval_on(&coords)?);
            }
        }
        let gamma = self.gamma1.iter().map(|f| f.eval_on(&coords)).collect::<Result<_>>()?;
        Ok(Level1Jets {
            q: Array2::from_shape_vec((d, s), q).expect("sizes checked"),
            gamma,
        })
    }

    /// The same potential with a different gauge parameter.
    pub fn with_parameter(&self, gamma1: Vec<ScalarField>) -> Result<Self> {
        GaugeLevel1::new(self.shape, self.q1.clone(), gamma1)
    }

    fn check(&self, lie: &LieStructure) -> Result<()> {
        if lie.dim() != self.algebra_dim() {
            return Err(Error::Shape(format!(
                "structure constants of dimension {} for a potential with {} components",
                lie.dim(),
                self.algebra_dim()
            )));
        }
        Ok(())
    }

    fn check_theta(&self, theta: &ThetaMatrix) -> Result<()> {
        if theta.dim() != self.shape.dim() {
            return Err(Error::Shape(format!(
                "θ of dimension {} on a chart of dimension {}",
                theta.dim(),
                self.shape.dim()
            )));
        }
        Ok(())
    }
}

/// Level-two coefficients of the enveloping-algebra expansion, as given by
/// the component formulas. The enveloping elements use their parts
/// symmetric in `(a, b)`, see [`GaugeLevel2::symmetrized`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeLevel2 {
    /// `q²_{μ,ab}`, stored `[[μ, a, b]]`.
    pub q2: Array3<f64>,
    /// `γ²_{ab}`.
    pub gamma2: Array2<f64>,
}

impl GaugeLevel2 {
    pub fn symmetrized(&self) -> GaugeLevel2 {
        let q2 = Array3::from_shape_fn(self.q2.dim(), |(m, a, b)| 0.5 * (self.q2[[m, a, b]] + self.q2[[m, b, a]]));
        let gamma2 = Array2::from_shape_fn(self.gamma2.dim(), |(a, b)| {
            0.5 * (self.gamma2[[a, b]] + self.gamma2[[b, a]])
        });
        GaugeLevel2 { q2, gamma2 }
    }

    pub fn max_abs(&self) -> f64 {
        self.q2.iter().chain(self.gamma2.iter()).fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `Σ_{e,c} f^{ec}_b x_e y_c`.
fn bracket(lie: &LieStructure, x: &[Jet], y: &[Jet], b: usize) -> Option<Jet> {
    let mut acc: Option<Jet> = None;
    for e in 0..lie.dim() {
        for c in 0..lie.dim() {
            let f = lie.get(e, c, b);
            if f != 0.0 {
                let t = (&x[e] * &y[c]) * f;
                acc = Some(match acc {
                    Some(a) => a + t,
                    None => t,
                });
            }
        }
    }
    acc
}

fn add_opt(a: Jet, b: Option<Jet>) -> Jet {
    match b {
        Some(b) => a + b,
        None => a,
    }
}

fn row(a: &Array2<Jet>, i: usize) -> Vec<Jet> {
    a.row(i).to_vec()
}

/// `R¹_{τμ,b} = ∂_τ q_{μ,b} − ∂_μ q_{τ,b} + f^{ec}_b q_{τ,e} q_{μ,c}`,
/// stored `[[τ, μ, b]]`, one order below `q`.
pub fn curvature_jets(q: &Array2<Jet>, lie: &LieStructure) -> Array3<Jet> {
    let (d, s) = q.dim();
    let order = q[[0, 0]].order();
    let low = q.mapv(|j| j.truncate(order.saturating_sub(1)));
    Array3::from_shape_fn((d, d, s), |(t, m, b)| {
        let lin = q[[m, b]].partial(t) - q[[t, b]].partial(m);
        add_opt(lin, bracket(lie, &row(&low, t), &row(&low, m), b))
    })
}

/// The same field strength on the adapted frame `δ_μ` of a bundle:
/// `δ_τ q_μ − δ_μ q_τ − W^ν_{τμ} q_ν + [q_τ, q_μ]`. Reduces to
/// [`curvature_jets`] when the N-connection vanishes.
pub fn adapted_curvature_jets(q: &Array2<Jet>, geom: &GeometryJets, lie: &LieStructure) -> Array3<Jet> {
    let (d, s) = q.dim();
    let order = q[[0, 0]].order();
    let low = q.mapv(|j| j.truncate(order.saturating_sub(1)));
    let w = geom.anholonomy();
    Array3::from_shape_fn((d, d, s), |(t, m, b)| {
        let mut lin = geom.delta(&q[[m, b]], t) - geom.delta(&q[[t, b]], m);
        for nu in 0..d {
            lin = lin - &low[[nu, b]] * &w[[nu, t, m]].truncate(order.saturating_sub(1));
        }
        add_opt(lin, bracket(lie, &row(&low, t), &row(&low, m), b))
    })
}

/// `δq¹_{μ,a} = ∂_μ γ_a − f^{bc}_a γ_b q_{μ,c}`, one order below the inputs.
pub fn variation_jets(q: &Array2<Jet>, gamma: &[Jet], lie: &LieStructure) -> Array2<Jet> {
    let (d, s) = q.dim();
    let order = q[[0, 0]].order();
    let low = q.mapv(|j| j.truncate(order.saturating_sub(1)));
    let glow: Vec<Jet> = gamma.iter().map(|j| j.truncate(order.saturating_sub(1))).collect();
    Array2::from_shape_fn((d, s), |(m, a)| {
        let lin = gamma[a].partial(m);
        match bracket(lie, &glow, &row(&low, m), a) {
            Some(b) => lin - b,
            None => lin,
        }
    })
}

/// Field strength values `R¹_{τμ,b}` at `u`.
pub fn gauge_curvature(level: &GaugeLevel1, lie: &LieStructure, u: &[f64]) -> Result<Array3<f64>> {
    level.check(lie)?;
    let jets = level.jets(u, 1)?;
    Ok(curvature_jets(&jets.q, lie).mapv(|j| j.value()))
}

/// Infinitesimal gauge variation `δq¹_{μ,a}` at `u`.
pub fn gauge_variation(level: &GaugeLevel1, lie: &LieStructure, u: &[f64]) -> Result<Array2<f64>> {
    level.check(lie)?;
    let jets = level.jets(u, 1)?;
    Ok(variation_jets(&jets.q, &jets.gamma, lie).mapv(|j| j.value()))
}

/// `γ²_{ab} = ½ θ^{νμ} ∂_ν γ_a q_{μ,b}` and
/// `q²_{μ,ab} = −½ θ^{ντ} q_{ν,a} (∂_τ q_{μ,b} + R¹_{τμ,b})`.
pub fn sw_expand(level: &GaugeLevel1, theta: &ThetaMatrix, lie: &LieStructure, u: &[f64]) -> Result<GaugeLevel2> {
    level.check(lie)?;
    level.check_theta(theta)?;
    let d = level.shape.dim();
    let s = level.algebra_dim();
    let jets = level.jets(u, 1)?;
    let r1 = curvature_jets(&jets.q, lie).mapv(|j| j.value());
    let q = jets.q.mapv(|j| j.value());
    let dq = Array3::from_shape_fn((d, d, s), |(t, m, b)| jets.q[[m, b]].gradient(t));
    let gamma2 = Array2::from_shape_fn((s, s), |(a, b)| {
        let mut acc = 0.0;
        for nu in 0..d {
            for mu in 0..d {
                acc += theta.get(nu, mu) * jets.gamma[a].gradient(nu) * q[[mu, b]];
            }
        }
        0.5 * acc
    });
    let q2 = Array3::from_shape_fn((d, s, s), |(mu, a, b)| {
        let mut acc = 0.0;
        for nu in 0..d {
            for tau in 0..d {
                let t = theta.get(nu, tau);
                if t != 0.0 {
                    acc += t * q[[nu, a]] * (dq[[tau, mu, b]] + r1[[tau, mu, b]]);
                }
            }
        }
        -0.5 * acc
    });
    Ok(GaugeLevel2 { q2, gamma2 })
}

/// Field strength with its first-order θ correction. The correction is an
/// enveloping-algebra element with symmetric coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectedCurvature {
    /// `R¹_{τλ,a}`.
    pub r1: Array3<f64>,
    /// `R²_{τλ,ab}`, symmetric in `(a, b)`.
    pub r2: Array4<f64>,
}

impl CorrectedCurvature {
    /// Largest violation of antisymmetry in the two form indices.
    pub fn antisymmetry_residual(&self) -> f64 {
        let (d, _, s) = self.r1.dim();
        let mut worst: f64 = 0.0;
        for t in 0..d {
            for l in 0..d {
                for a in 0..s {
                    worst = worst.max((self.r1[[t, l, a]] + self.r1[[l, t, a]]).abs());
                    for b in 0..s {
                        worst = worst.max((self.r2[[t, l, a, b]] + self.r2[[l, t, a, b]]).abs());
                    }
                }
            }
        }
        worst
    }
}

/// `D_ν R¹_{τλ,b} = ∂_ν R¹_{τλ,b} + f^{cd}_b q_{ν,c} R¹_{τλ,d}`, stored
/// `[[ν, τ, λ, b]]` as values.
fn covariant_derivative(q: &Array2<f64>, r1: &Array3<Jet>, lie: &LieStructure) -> Array4<f64> {
    let (d, _, s) = r1.dim();
    Array4::from_shape_fn((d, d, d, s), |(nu, t, l, b)| {
        let mut acc = r1[[t, l, b]].gradient(nu);
        for c in 0..s {
            for e in 0..s {
                let f = lie.get(c, e, b);
                if f != 0.0 {
                    acc += f * q[[nu, c]] * r1[[t, l, e]].value();
                }
            }
        }
        acc
    })
}

/// `R_{τλ} = R¹_{τλ} + θ^{μν} (R¹_{τμ,a} R¹_{λν,b} − ½ q_{μ,a} (D_ν R¹_{τλ} + ∂_ν R¹_{τλ})_b) I^a I^b`
/// with the `(a, b)` coefficients symmetrized.
pub fn corrected_curvature(
    level: &GaugeLevel1,
    theta: &ThetaMatrix,
    lie: &LieStructure,
    u: &[f64],
) -> Result<CorrectedCurvature> {
    level.check(lie)?;
    level.check_theta(theta)?;
    let d = level.shape.dim();
    let s = level.algebra_dim();
    let jets = level.jets(u, 2)?;
    let r1j = curvature_jets(&jets.q, lie);
    let r1 = r1j.mapv(|j| j.value());
    let q = jets.q.mapv(|j| j.value());
    let dr = covariant_derivative(&q, &r1j, lie);
    let raw = Array4::from_shape_fn((d, d, s, s), |(t, l, a, b)| {
        let mut acc = 0.0;
        for mu in 0..d {
            for nu in 0..d {
                let th = theta.get(mu, nu);
                if th == 0.0 {
                    continue;
                }
                let partial = r1j[[t, l, b]].gradient(nu);
                acc += th * (r1[[t, mu, a]] * r1[[l, nu, b]] - 0.5 * q[[mu, a]] * (dr[[nu, t, l, b]] + partial));
            }
        }
        acc
    });
    let r2 = Array4::from_shape_fn((d, d, s, s), |(t, l, a, b)| 0.5 * (raw[[t, l, a, b]] + raw[[t, l, b, a]]));
    Ok(CorrectedCurvature { r1, r2 })
}
