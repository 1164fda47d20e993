//! The nonlinear de Sitter gauge potential obtained by dressing an
//! `so_η(5)` connection with a section `t` of the de Sitter hyperboloid.

use nalgebra::DMatrix;
use ndarray::{Array2, Array3};

use crate::dsl::{BundleShape, ScalarField};
use crate::error::{Error, Result};
use crate::jet::Jet;

/// Fields of the linear connection `Ω̃ = [[ω, θ̃], [θ̃_β, 0]]` and the section.
#[derive(Debug, Clone)]
pub struct NonlinearGaugeFields {
    pub shape: BundleShape,
    /// `ω^ᾱ_{β̄μ}` as `omega[ᾱ][β̄][μ]`.
    pub omega: Vec<Vec<Vec<ScalarField>>>,
    /// `θ̃^ᾱ_μ` as `theta[ᾱ][μ]`.
    pub theta: Vec<Vec<ScalarField>>,
    /// `(t^1, …, t^4, t^5)`.
    pub t: Vec<ScalarField>,
}

/// Dressed potential at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearPotential {
    /// `Γ^ᾱ_{β̄μ}`, stored `[[ᾱ, β̄, μ]]`.
    pub gamma: Array3<f64>,
    /// `θ^ᾱ_μ`, stored `[[ᾱ, μ]]`.
    pub theta: Array2<f64>,
    pub eta: [f64; 5],
}

impl NonlinearPotential {
    /// Bordered 5×5 matrix `[[Γ_μ, θ_μ], [θ_{β̄ μ}, 0]]` for direction `μ`,
    /// with `θ_β̄ = η_β̄β̄ θ^β̄`.
    pub fn matrix(&self, mu: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(5, 5);
        for a in 0..4 {
            for b in 0..4 {
                m[(a, b)] = self.gamma[[a, b, mu]];
            }
            m[(a, 4)] = self.theta[[a, mu]];
            m[(4, a)] = self.eta[a] * self.theta[[a, mu]];
        }
        m
    }
}

impl NonlinearGaugeFields {
    fn check(&self) -> Result<()> {
        let d = self.shape.dim();
        let ok = self.omega.len() == 4
            && self.omega.iter().all(|r| r.len() == 4 && r.iter().all(|c| c.len() == d))
            && self.theta.len() == 4
            && self.theta.iter().all(|r| r.len() == d)
            && self.t.len() == 5;
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "nonlinear potential needs ω[4][4][{d}], θ̃[4][{d}] and five section fields"
            )))
        }
    }
}

/// Components of `Γ = b⁻¹ Ω̃ b + b⁻¹ db`:
/// `Γ^ᾱ_β̄ = ω^ᾱ_β̄ − (t^ᾱ Dt_β̄ − t_β̄ Dt^ᾱ)/(1 + t⁵) − (t^ᾱ θ̃_β̄ − θ̃^ᾱ t_β̄)` and
/// `θ^ᾱ = t⁵ θ̃^ᾱ + Dt^ᾱ − t^ᾱ (dt⁵ + θ̃_γ̄ t^γ̄)/(1 + t⁵)` with
/// `Dt^ᾱ = dt^ᾱ + ω^ᾱ_β̄ t^β̄`; flat indices are lowered with the `so(4)`
/// block of `η`. The last term of `Γ` comes from conjugating the
/// translational part of `Ω̃` by `b`; without it the rotation block does not
/// match the matrix product.
pub fn nonlinear_potential(fields: &NonlinearGaugeFields, eta: &[f64; 5], u: &[f64]) -> Result<NonlinearPotential> {
    fields.check()?;
    let d = fields.shape.dim();
    let t: Vec<Jet> = fields.t.iter().map(|f| f.eval_jet(u, 1)).collect::<Result<_>>()?;
    let tv: Vec<f64> = t.iter().map(Jet::value).collect();
    let denom = 1.0 + tv[4];
    if denom.abs() < 1e-12 {
        return Err(Error::Degenerate(format!(
            "section hits the parametrization pole 1 + t⁵ = 0 (t⁵ = {})",
            tv[4]
        )));
    }
    let omega = Array3::from_shape_fn((4, 4, d), |(a, b, mu)| fields.omega[a][b][mu].eval(u));
    let theta_t = Array2::from_shape_fn((4, d), |(a, mu)| fields.theta[a][mu].eval(u));
    let (omega, theta_t) = (collect3(omega)?, collect2(theta_t)?);
    let dt = |a: usize, mu: usize| t[a].gradient(mu);
    // Dt^ᾱ_μ
    let big_d = Array2::from_shape_fn((4, d), |(a, mu)| {
        dt(a, mu) + (0..4).map(|b| omega[[a, b, mu]] * tv[b]).sum::<f64>()
    });
    let gamma = Array3::from_shape_fn((4, 4, d), |(a, b, mu)| {
        omega[[a, b, mu]] - (tv[a] * eta[b] * big_d[[b, mu]] - eta[b] * tv[b] * big_d[[a, mu]]) / denom
            - (tv[a] * eta[b] * theta_t[[b, mu]] - theta_t[[a, mu]] * eta[b] * tv[b])
    });
    let theta = Array2::from_shape_fn((4, d), |(a, mu)| {
        let contracted: f64 = (0..4).map(|c| eta[c] * theta_t[[c, mu]] * tv[c]).sum();
        tv[4] * theta_t[[a, mu]] + big_d[[a, mu]] - tv[a] * (dt(4, mu) + contracted) / denom
    });
    Ok(NonlinearPotential {
        gamma,
        theta,
        eta: *eta,
    })
}

fn collect3(a: Array3<Result<f64>>) -> Result<Array3<f64>> {
    let dim = a.dim();
    let v: Vec<f64> = a.into_iter().collect::<Result<_>>()?;
    Ok(Array3::from_shape_vec(dim, v).expect("same length"))
}

fn collect2(a: Array2<Result<f64>>) -> Result<Array2<f64>> {
    let dim = a.dim();
    let v: Vec<f64> = a.into_iter().collect::<Result<_>>()?;
    Ok(Array2::from_shape_vec(dim, v).expect("same length"))
}

/// The dressing matrix `b = [[δ + t tᵀ_η/(1 + t⁵), t], [t_η, t⁵]]`.
pub fn dressing_matrix(t: &[f64], eta: &[f64; 5]) -> Result<DMatrix<f64>> {
    if t.len() != 5 {
        return Err(Error::Shape(format!("section has {} components, expected 5", t.len())));
    }
    let denom = 1.0 + t[4];
    if denom.abs() < 1e-12 {
        return Err(Error::Degenerate("section hits the parametrization pole 1 + t⁵ = 0".into()));
    }
    let mut b = DMatrix::zeros(5, 5);
    for a in 0..4 {
        for c in 0..4 {
            b[(a, c)] = if a == c { 1.0 } else { 0.0 } + t[a] * eta[c] * t[c] / denom;
        }
        b[(a, 4)] = t[a];
        b[(4, a)] = eta[a] * t[a];
    }
    b[(4, 4)] = t[4];
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_field;
    use crate::gauge::algebra::DEFAULT_ETA;

    fn shape() -> BundleShape {
        BundleShape::new(2, 2).unwrap()
    }

    fn field(s: &str) -> ScalarField {
        parse_field(s, shape()).unwrap()
    }

    /// An `so(4)`-valued ω (antisymmetric for the Euclidean block) with
    /// coordinate dependence, a generic θ̃, and the given section.
    fn sample(t: [&str; 5]) -> NonlinearGaugeFields {
        let mut omega = vec![vec![vec![ScalarField::zero(shape()); 4]; 4]; 4];
        for a in 0..4 {
            for b in a + 1..4 {
                for mu in 0..4 {
                    let src = format!("0.{}*x1 + 0.0{}*y2 - 0.1*{}", a + b + 1, mu + 1, (a * 4 + b + mu) % 3);
                    omega[a][b][mu] = field(&src);
                    omega[b][a][mu] = field(&format!("-({src})"));
                }
            }
        }
        let theta = (0..4)
            .map(|a| (0..4).map(|mu| field(&format!("0.{} + 0.1*x2*{}", a + mu + 1, mu))).collect())
            .collect();
        NonlinearGaugeFields {
            shape: shape(),
            omega,
            theta,
            t: t.iter().map(|s| field(s)).collect(),
        }
    }

    #[test]
    fn identity_section_leaves_connection_unchanged() {
        let f = sample(["0", "0", "0", "0", "1"]);
        let u = [0.3, -0.2, 0.5, 0.1];
        let p = nonlinear_potential(&f, &DEFAULT_ETA, &u).unwrap();
        for a in 0..4 {
            for mu in 0..4 {
                assert!((p.theta[[a, mu]] - f.theta[a][mu].eval(&u).unwrap()).abs() < 1e-14);
                for b in 0..4 {
                    assert!((p.gamma[[a, b, mu]] - f.omega[a][b][mu].eval(&u).unwrap()).abs() < 1e-14);
                }
            }
        }
        let m = p.matrix(1);
        assert_eq!(m[(4, 4)], 0.0);
        assert!(dressing_matrix(&[0.0, 0.0, 0.0, 0.0, 1.0], &DEFAULT_ETA)
            .unwrap()
            .is_identity(0.0));
    }

    #[test]
    fn constant_section_without_rotation() {
        let mut f = sample(["0.3", "-0.2", "0.1", "0.4", "0.7"]);
        for row in f.omega.iter_mut() {
            for col in row.iter_mut() {
                col.iter_mut().for_each(|c| *c = ScalarField::zero(shape()));
            }
        }
        let u = [0.1, 0.2, 0.3, 0.4];
        let p = nonlinear_potential(&f, &DEFAULT_ETA, &u).unwrap();
        let t = [0.3, -0.2, 0.1, 0.4, 0.7];
        for mu in 0..4 {
            let th: Vec<f64> = (0..4).map(|a| f.theta[a][mu].eval(&u).unwrap()).collect();
            let dot: f64 = (0..4).map(|c| th[c] * t[c]).sum();
            for a in 0..4 {
                let expect = t[4] * th[a] - t[a] * dot / (1.0 + t[4]);
                assert!((p.theta[[a, mu]] - expect).abs() < 1e-14);
                for b in 0..4 {
                    let rot = -(t[a] * th[b] - th[a] * t[b]);
                    assert!((p.gamma[[a, b, mu]] - rot).abs() < 1e-14);
                }
            }
        }
    }

    /// On the hyperboloid `|t|² − (t⁵)² = −1` the component formulas agree
    /// with `b⁻¹ Ω̃ b + b⁻¹ db` computed by matrix algebra.
    #[test]
    fn matches_matrix_dressing_on_the_hyperboloid() {
        let t4 = ["0.3*x1", "-0.2 + 0.1*y1", "0.1*x2*y2", "0.4"];
        let norm = t4.iter().map(|s| format!("({s})^2")).collect::<Vec<_>>().join(" + ");
        let t5 = format!("sqrt(1 + {norm})");
        let f = sample([t4[0], t4[1], t4[2], t4[3], &t5]);
        let eta = DEFAULT_ETA;
        let u = [0.4, -0.3, 0.6, 0.2];
        let p = nonlinear_potential(&f, &eta, &u).unwrap();
        let tj: Vec<Jet> = f.t.iter().map(|s| s.eval_jet(&u, 1).unwrap()).collect();
        let tv: Vec<f64> = tj.iter().map(Jet::value).collect();
        let b = dressing_matrix(&tv, &eta).unwrap();
        let binv = b.clone().try_inverse().unwrap();
        for mu in 0..4 {
            // db by a central difference of the dressing matrix along u^μ
            let h = 1e-6;
            let shifted = |s: f64| {
                let mut v = u;
                v[mu] += s;
                let t: Vec<f64> = f.t.iter().map(|x| x.eval(&v).unwrap()).collect();
                dressing_matrix(&t, &eta).unwrap()
            };
            let db = (shifted(h) - shifted(-h)) / (2.0 * h);
            let mut omega = DMatrix::zeros(5, 5);
            for a in 0..4 {
                for c in 0..4 {
                    omega[(a, c)] = f.omega[a][c][mu].eval(&u).unwrap();
                }
                let th = f.theta[a][mu].eval(&u).unwrap();
                omega[(a, 4)] = th;
                omega[(4, a)] = eta[a] * th;
            }
            let expect = &binv * omega * &b + &binv * db;
            let got = p.matrix(mu);
            assert!((&expect - &got).amax() < 1e-7, "direction {mu}\n{expect}\n{got}");
        }
    }

    #[test]
    fn pole_is_reported() {
        let f = sample(["0", "0", "0", "0", "-1"]);
        assert!(matches!(
            nonlinear_potential(&f, &DEFAULT_ETA, &[0.0; 4]),
            Err(Error::Degenerate(_))
        ));
    }
}
