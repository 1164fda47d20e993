//! The `sw` subcommand: first-order Seiberg–Witten expansion of a gauge
//! potential and its consistency checks over sample points.

use std::path::PathBuf;

use dgeom_core::dsl::{parse_field, BundleShape, ScalarField};
use dgeom_core::gauge::algebra::structure_constants;
use dgeom_core::gauge::envelope::strength_consistency_check;
use dgeom_core::gauge::{
    closure_check, corrected_curvature, covariance_check, sw_expand, sw_residual_scaling, DeSitterAlgebra, GaugeLevel1,
    DEFAULT_ETA,
};
use dgeom_core::ncalg::{LieStructure, ThetaMatrix};
use dgeom_core::sampling::SampleSpec;
use nalgebra::DMatrix;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::config::resolve_points;
use crate::error::{CliError, CliResult, Context};
use crate::report::{assemble, num, tensor, PointOutput, Report};

pub mod tol {
    /// Exact-arithmetic identities (vanishing at θ = 0, linearity in θ).
    pub const EXACT: f64 = 1e-12;
    pub const CLOSURE: f64 = 1e-9;
    pub const COVARIANCE: f64 = 1e-9;
    pub const STRENGTH: f64 = 1e-9;
    /// Allowed distance of the log–log slope from 2.
    pub const SLOPE: f64 = 0.1;
}

fn default_eta() -> [f64; 5] {
    DEFAULT_ETA
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgebraSpec {
    Desitter {
        #[serde(default = "default_eta")]
        eta: [f64; 5],
        #[serde(default = "one")]
        l: f64,
    },
    /// su(2) in its adjoint representation.
    Su2,
    /// Real matrices closed under commutators.
    Matrices(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// DSL fields: `q1[μ][a]`, `gamma1[a]` and an optional second gauge
    /// parameter for the closure check.
    Fields {
        q1: Vec<Vec<String>>,
        gamma1: Vec<String>,
        #[serde(default)]
        varsigma: Option<Vec<String>>,
    },
    /// Quadratic polynomials with seeded coefficients in `[-amplitude, amplitude]`.
    Random {
        seed: u64,
        #[serde(default = "default_amplitude")]
        amplitude: f64,
    },
}

fn default_amplitude() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwChecks {
    pub expand: bool,
    pub linearity: bool,
    pub corrected_curvature: bool,
    pub closure: bool,
    pub covariance: bool,
    pub strength: bool,
    /// θ scale factors for the residual-decay check; empty to skip.
    pub scaling: Vec<f64>,
}

impl Default for SwChecks {
    fn default() -> Self {
        SwChecks {
            expand: true,
            linearity: true,
            corrected_curvature: true,
            closure: true,
            covariance: true,
            strength: true,
            scaling: vec![1.0, 0.5, 0.25],
        }
    }
}

fn default_fraction() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwConfig {
    /// `[n, m]`: base and fiber dimensions.
    pub shape: [usize; 2],
    pub algebra: AlgebraSpec,
    pub potential: PotentialSpec,
    /// Strict upper triangle of θ, row by row.
    pub theta: Vec<f64>,
    #[serde(default)]
    pub sample: SampleSpec,
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub checks: SwChecks,
    #[serde(default = "default_fraction")]
    pub degenerate_fraction: f64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

/// Everything the sweep needs, validated.
pub struct SwSetup {
    pub shape: BundleShape,
    pub lie: LieStructure,
    pub basis: Vec<DMatrix<f64>>,
    pub level: GaugeLevel1,
    pub varsigma: Vec<ScalarField>,
    pub theta: ThetaMatrix,
    pub points: Vec<Vec<f64>>,
}

/// `(ad_a)^c_b = f^{ab}_c`, a representation by the Jacobi identity.
pub fn adjoint_basis(lie: &LieStructure) -> Vec<DMatrix<f64>> {
    let s = lie.dim();
    (0..s).map(|a| DMatrix::from_fn(s, s, |c, b| lie.get(a, b, c))).collect()
}

fn algebra(spec: &AlgebraSpec) -> CliResult<(LieStructure, Vec<DMatrix<f64>>)> {
    match spec {
        AlgebraSpec::Desitter { eta, l } => {
            let alg = DeSitterAlgebra::new(*eta, *l).context(|| "de Sitter algebra".into())?;
            Ok((alg.structure, alg.generators))
        }
        AlgebraSpec::Su2 => {
            let lie = LieStructure::su2();
            let basis = adjoint_basis(&lie);
            Ok((lie, basis))
        }
        AlgebraSpec::Matrices(rows) => {
            let basis = rows
                .iter()
                .enumerate()
                .map(|(k, m)| {
                    let size = m.len();
                    if size == 0 || m.iter().any(|r| r.len() != size) {
                        return Err(CliError::usage(format!("algebra matrix {k} is not square")));
                    }
                    Ok(DMatrix::from_fn(size, size, |i, j| m[i][j]))
                })
                .collect::<CliResult<Vec<_>>>()?;
            if basis.is_empty() || basis.iter().any(|b| b.nrows() != basis[0].nrows()) {
                return Err(CliError::usage("algebra matrices must be nonempty and of one size"));
            }
            let lie = structure_constants(&basis).context(|| "algebra matrices".into())?;
            Ok((lie, basis))
        }
    }
}

/// Seeded quadratic fields in the chart coordinates, written in the DSL so
/// that they go through the same parser as user input.
fn random_fields(shape: BundleShape, count: usize, rng: &mut ChaCha8Rng, amplitude: f64) -> CliResult<Vec<ScalarField>> {
    let vars: Vec<String> = (1..=shape.n)
        .map(|i| format!("x{i}"))
        .chain((1..=shape.m).map(|a| format!("y{a}")))
        .collect();
    (0..count)
        .map(|_| {
            let mut c = || rng.gen_range(-amplitude..=amplitude);
            let mut src = format!("{:?}", c());
            for (k, v) in vars.iter().enumerate() {
                src += &format!(" + ({:?})*{v}", c());
                for w in &vars[k..] {
                    src += &format!(" + ({:?})*{v}*{w}", c());
                }
            }
            parse_field(&src, shape).context(|| "generated field".into())
        })
        .collect()
}

fn parse_all(srcs: &[String], shape: BundleShape, what: &str) -> CliResult<Vec<ScalarField>> {
    srcs.iter()
        .enumerate()
        .map(|(i, s)| parse_field(s, shape).context(|| format!("{what}[{i}]")))
        .collect()
}

impl SwConfig {
    pub fn setup(&self) -> CliResult<SwSetup> {
        let [n, m] = self.shape;
        let shape = BundleShape::new(n, m).context(|| "shape".into())?;
        if !(0.0..=1.0).contains(&self.degenerate_fraction) {
            return Err(CliError::usage("degenerate_fraction must lie in [0, 1]"));
        }
        if self.checks.scaling.len() == 1 || self.checks.scaling.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(CliError::usage("checks.scaling needs at least two positive scales (or none)"));
        }
        let (lie, basis) = algebra(&self.algebra)?;
        let d = shape.dim();
        let s = lie.dim();
        let (q1, gamma1, varsigma) = match &self.potential {
            PotentialSpec::Fields { q1, gamma1, varsigma } => {
                if q1.len() != d || q1.iter().any(|r| r.len() != s) || gamma1.len() != s {
                    return Err(CliError::usage(format!(
                        "q1 must be {d}×{s} and gamma1 of length {s} for this chart and algebra"
                    )));
                }
                let q = q1
                    .iter()
                    .enumerate()
                    .map(|(mu, row)| parse_all(row, shape, &format!("q1[{mu}]")))
                    .collect::<CliResult<Vec<_>>>()?;
                let g = parse_all(gamma1, shape, "gamma1")?;
                let v = match varsigma {
                    Some(v) if v.len() == s => parse_all(v, shape, "varsigma")?,
                    Some(_) => return Err(CliError::usage(format!("varsigma must have length {s}"))),
                    None => g.clone(),
                };
                (q, g, v)
            }
            PotentialSpec::Random { seed, amplitude } => {
                if !(amplitude.is_finite() && *amplitude > 0.0) {
                    return Err(CliError::usage("random amplitude must be positive"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let q = (0..d)
                    .map(|_| random_fields(shape, s, &mut rng, *amplitude))
                    .collect::<CliResult<Vec<_>>>()?;
                let g = random_fields(shape, s, &mut rng, *amplitude)?;
                let v = random_fields(shape, s, &mut rng, *amplitude)?;
                (q, g, v)
            }
        };
        let level = GaugeLevel1::new(shape, q1, gamma1).context(|| "gauge potential".into())?;
        if self.theta.len() != d * (d - 1) / 2 {
            return Err(CliError::usage(format!(
                "theta needs the {} upper-triangle entries of a {d}×{d} matrix, got {}",
                d * (d - 1) / 2,
                self.theta.len()
            )));
        }
        let theta = ThetaMatrix::from_upper(d, &self.theta).context(|| "theta".into())?;
        let points = resolve_points(self.points.as_deref(), &self.sample, shape)?;
        Ok(SwSetup {
            shape,
            lie,
            basis,
            level,
            varsigma,
            theta,
            points,
        })
    }
}

fn max_abs<D: ndarray::Dimension>(a: &ndarray::Array<f64, D>) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl SwSetup {
    fn point(&self, checks: &SwChecks, u: &[f64]) -> dgeom_core::Result<PointOutput> {
        let (lv, th, lie) = (&self.level, &self.theta, &self.lie);
        let mut out = Map::new();
        let mut res = Vec::new();
        if checks.expand || checks.linearity {
            let l2 = sw_expand(lv, th, lie, u)?;
            if checks.expand {
                out.insert(
                    "level2".into(),
                    json!({
                        "gamma2": tensor(&l2.gamma2),
                        "q2": tensor(&l2.q2),
                        "max_abs": num(l2.max_abs()),
                    }),
                );
            }
            if checks.linearity {
                let zero = sw_expand(lv, &th.scaled(0.0), lie, u)?.max_abs();
                let doubled = sw_expand(lv, &th.scaled(2.0), lie, u)?;
                let lin = max_abs(&(&doubled.q2 - &(&l2.q2 * 2.0))).max(max_abs(&(&doubled.gamma2 - &(&l2.gamma2 * 2.0))));
                res.push(("expand_at_zero_theta", zero, Some(tol::EXACT)));
                res.push(("expand_linearity", lin, Some(tol::EXACT)));
            }
        }
        if checks.corrected_curvature {
            let c = corrected_curvature(lv, th, lie, u)?;
            let c2 = corrected_curvature(lv, &th.scaled(2.0), lie, u)?;
            let lin = max_abs(&(&c2.r2 - &(&c.r2 * 2.0))).max(max_abs(&(&c2.r1 - &c.r1)));
            res.push(("corrected_curvature_linearity", lin, Some(tol::EXACT)));
            res.push(("corrected_curvature_antisymmetry", c.antisymmetry_residual(), Some(tol::EXACT)));
            out.insert(
                "corrected_curvature".into(),
                json!({"r1": tensor(&c.r1), "r2_max_abs": num(max_abs(&c.r2))}),
            );
        }
        if checks.closure {
            let r = closure_check(lv, &self.varsigma, th, &self.basis, u)?;
            res.push(("closure", r, Some(tol::CLOSURE)));
            out.insert("closure".into(), num(r));
        }
        if checks.covariance {
            let r = covariance_check(lv, th, &self.basis, u)?;
            res.push(("covariance", r, Some(tol::COVARIANCE)));
            out.insert("covariance".into(), num(r));
        }
        if checks.strength {
            let r = strength_consistency_check(lv, th, &self.basis, u)?;
            res.push(("strength_consistency", r, Some(tol::STRENGTH)));
            out.insert("strength_consistency".into(), num(r));
        }
        if !checks.scaling.is_empty() {
            let rep = sw_residual_scaling(lv, th, &self.basis, u, &checks.scaling)?;
            let dev = rep.slopes.iter().fold(0.0_f64, |m, s| m.max((s - 2.0).abs()));
            // a residual already at rounding level has no meaningful slope
            let gate = (rep.residuals.iter().cloned().fold(f64::INFINITY, f64::min) > 1e-13).then_some(tol::SLOPE);
            res.push(("scaling_slope_deviation", dev, gate));
            out.insert(
                "scaling".into(),
                json!({
                    "scales": rep.scales,
                    "residuals": rep.residuals.iter().map(|x| num(*x)).collect::<Vec<_>>(),
                    "slopes": rep.slopes.iter().map(|x| num(*x)).collect::<Vec<_>>(),
                }),
            );
        }
        Ok(PointOutput {
            value: Value::Object(out),
            residuals: res,
        })
    }
}

pub fn run_sw(cfg: &SwConfig) -> CliResult<Report> {
    let setup = cfg.setup()?;
    let outcomes: Vec<_> = setup.points.par_iter().map(|u| setup.point(&cfg.checks, u)).collect();
    let mut config = serde_json::to_value(cfg).expect("configs serialize");
    let theta = Array2::from_shape_fn((setup.shape.dim(), setup.shape.dim()), |(i, j)| setup.theta.get(i, j));
    config["theta_matrix"] = tensor(&theta);
    config["structure_constants"] = tensor(setup.lie.constants());
    assemble(config, &setup.points, outcomes, cfg.degenerate_fraction)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Exit;

    fn config(algebra: AlgebraSpec) -> SwConfig {
        SwConfig {
            shape: [2, 2],
            algebra,
            potential: PotentialSpec::Random {
                seed: 3,
                amplitude: 0.1,
            },
            theta: vec![0.03, -0.02, 0.01, 0.025, -0.015, 0.02],
            sample: SampleSpec {
                count: 2,
                ..SampleSpec::default()
            },
            points: None,
            checks: SwChecks::default(),
            degenerate_fraction: 0.1,
            output: None,
        }
    }

    #[test]
    fn adjoint_su2_reproduces_its_constants() {
        let lie = LieStructure::su2();
        let back = structure_constants(&adjoint_basis(&lie)).unwrap();
        assert!(max_abs(&(back.constants() - lie.constants())) < 1e-14);
    }

    #[test]
    fn random_de_sitter_potential_passes() {
        let r = run_sw(&config(AlgebraSpec::Desitter {
            eta: DEFAULT_ETA,
            l: 1.0,
        }))
        .unwrap();
        assert_eq!(r.summary["pass"], json!(true), "{}", r.summary);
    }

    #[test]
    fn su2_passes_without_scaling() {
        let mut cfg = config(AlgebraSpec::Su2);
        cfg.checks.scaling.clear();
        let r = run_sw(&cfg).unwrap();
        assert_eq!(r.summary["pass"], json!(true), "{}", r.summary);
    }

    #[test]
    fn shape_mismatches_are_usage_errors() {
        let mut cfg = config(AlgebraSpec::Su2);
        cfg.theta.pop();
        assert_eq!(run_sw(&cfg).err().unwrap().exit, Exit::Usage);
        let mut cfg = config(AlgebraSpec::Su2);
        cfg.potential = PotentialSpec::Fields {
            q1: vec![vec!["x1".into(); 3]; 4],
            gamma1: vec!["x1 +".into(), "0".into(), "0".into()],
            varsigma: None,
        };
        assert_eq!(run_sw(&cfg).err().unwrap().exit, Exit::Parse);
    }
}
