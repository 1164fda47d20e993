//! The `verify` subcommand: named suites of invariant checks.
//!
//! Every check measures one residual (or, for the Ricci asymmetry, one
//! quantity that must stay away from zero) and compares it with a fixed
//! bound. Checks run in parallel; results are reported in suite order.

use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

use dgeom_core::catalog::{self, Geometry};
use dgeom_core::connection::{self, ConnectionSelector};
use dgeom_core::curvature::{self, LocalGeometry};
use dgeom_core::dsl::{parse_field, BundleShape};
use dgeom_core::finsler;
use dgeom_core::gauge::{curvature_bridge, DeSitterAlgebra, DEFAULT_ETA, LORENTZIAN_ETA};
use dgeom_core::ncalg::{lie_star, moyal_star, qplane_star, star_commutator, LieStructure, Poly, QOrdering, StarProduct, ThetaMatrix};
use dgeom_core::spectral::{self, Cutoff, GammaSet, SpinorField, VielbeinMethod};
use dgeom_core::{linalg, sample_points, GeometrySource, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::report::Report;
use crate::sw::{run_sw, AlgebraSpec, PotentialSpec, SwChecks, SwConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    All,
    Bundle,
    Connection,
    Curvature,
    Finsler,
    Spectral,
    Ncalg,
    Gauge,
}

impl Suite {
    const ORDER: [Suite; 7] = [
        Suite::Bundle,
        Suite::Connection,
        Suite::Curvature,
        Suite::Finsler,
        Suite::Spectral,
        Suite::Ncalg,
        Suite::Gauge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Bundle => "bundle",
            Suite::Connection => "connection",
            Suite::Curvature => "curvature",
            Suite::Finsler => "finsler",
            Suite::Spectral => "spectral",
            Suite::Ncalg => "ncalg",
            Suite::Gauge => "gauge",
        }
    }

    fn members(self) -> Vec<Suite> {
        match self {
            Suite::All => Suite::ORDER.to_vec(),
            s => vec![s],
        }
    }
}

/// Deliberate defects used to show that the suites catch them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Injection {
    /// Flip the sign of the N-curvature Ω wherever a check consumes it.
    OmegaSign,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
}

impl Bound {
    fn holds(self, v: f64) -> bool {
        match self {
            Bound::AtMost(b) => v <= b,
            Bound::AtLeast(b) => v >= b,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::AtMost(b) => write!(f, "<= {b:.0e}"),
            Bound::AtLeast(b) => write!(f, ">= {b:.0e}"),
        }
    }
}

struct Check {
    suite: Suite,
    name: &'static str,
    bound: Bound,
    run: fn(&Ctx) -> Result<f64>,
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub suite: &'static str,
    pub name: &'static str,
    pub bound: Bound,
    /// The measured value, or the error that stopped the check.
    pub value: std::result::Result<f64, String>,
}

impl CheckResult {
    pub fn pass(&self) -> bool {
        matches!(self.value, Ok(v) if self.bound.holds(v))
    }

    /// `"suite / name"`.
    pub fn label(&self) -> String {
        format!("{} / {}", self.suite, self.name)
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass() { "PASS" } else { "FAIL" };
        match &self.value {
            Ok(v) => write!(f, "{status}  {:<58} {v:>10.3e}  ({})", self.label(), self.bound),
            Err(e) => write!(f, "{status}  {:<58} error: {e}", self.label()),
        }
    }
}

struct Ctx {
    inject: Option<Injection>,
    sw: OnceLock<std::result::Result<Report, String>>,
}

impl Ctx {
    fn omega_sign(&self) -> f64 {
        if self.inject == Some(Injection::OmegaSign) {
            -1.0
        } else {
            1.0
        }
    }

    /// One shared Seiberg–Witten sweep feeds all of its checks.
    fn sw_residual(&self, name: &str) -> Result<f64> {
        let report = self.sw.get_or_init(|| {
            let cfg = SwConfig {
                shape: [2, 2],
                algebra: AlgebraSpec::Desitter {
                    eta: DEFAULT_ETA,
                    l: 1.0,
                },
                potential: PotentialSpec::Random {
                    seed: 101,
                    amplitude: 0.1,
                },
                theta: vec![0.03, -0.02, 0.01, 0.025, -0.015, 0.02],
                sample: dgeom_core::SampleSpec {
                    count: 3,
                    seed: 7,
                    ..Default::default()
                },
                points: None,
                checks: SwChecks::default(),
                degenerate_fraction: 0.0,
                output: None,
            };
            run_sw(&cfg).map_err(|e| e.to_string())
        });
        let report = report.as_ref().map_err(|e| dgeom_core::Error::Invalid(e.clone()))?;
        report.summary["residuals"][name]["max"]
            .as_f64()
            .ok_or_else(|| dgeom_core::Error::Invalid(format!("residual {name} missing from the sweep")))
    }
}

fn geometry(id: &str) -> Result<Geometry> {
    catalog::builtin(id)
}

fn points(shape: BundleShape, count: usize, seed: u64) -> Vec<Vec<f64>> {
    sample_points(shape, count, seed)
}

fn worst(values: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    values.into_iter().try_fold(0.0_f64, |m, v| Ok(m.max(v?)))
}

// ---------------------------------------------------------------- bundle

/// `T^a_{ij}` from the connection pipeline against Ω from the δ-derivatives
/// of N.
fn torsion_omega(ctx: &Ctx) -> Result<f64> {
    let geo = geometry("anisotropic")?;
    let n = geo.shape().n;
    worst(points(geo.shape(), 20, 1).iter().map(|u| {
        let local = LocalGeometry::new(&geo, &ConnectionSelector::Canonical, u, 1)?;
        let t = curvature::torsion_point(&local);
        let omega = geo.geometry(u, 1)?.n_curvature().mapv(|j| j.value() * ctx.omega_sign());
        let mut m: f64 = 0.0;
        for ((a, i, j), v) in omega.indexed_iter() {
            m = m.max((t.full[[n + a, i, j]] - v).abs());
        }
        Ok(m)
    }))
}

fn commutator_identity(_: &Ctx) -> Result<f64> {
    let geo = geometry("anisotropic")?;
    let shape = geo.shape();
    let fields = ["x1*y2^2 + sin(x2)", "exp(0.3*y1)*x1^2", "cos(x1*y1) + y2", "x2^3*y1*y2"]
        .iter()
        .map(|s| parse_field(s, shape))
        .collect::<Result<Vec<_>>>()?;
    let d = shape.dim();
    worst(points(shape, 10, 2).iter().map(|u| {
        let geom = geo.geometry(u, 2)?;
        let w = geom.anholonomy();
        let mut m: f64 = 0.0;
        for f in &fields {
            let f = f.eval_jet(u, 2)?;
            let df: Vec<_> = (0..d).map(|c| geom.delta(&f, c)).collect();
            for a in 0..d {
                for b in 0..d {
                    let lhs = (geom.delta(&df[b], a) - geom.delta(&df[a], b)).value();
                    let rhs: f64 = (0..d).map(|c| w[[c, a, b]].value() * df[c].value()).sum();
                    m = m.max((lhs - rhs).abs());
                }
            }
        }
        Ok(m)
    }))
}

fn anholonomy_is_omega(ctx: &Ctx) -> Result<f64> {
    let geo = geometry("anisotropic")?;
    let n = geo.shape().n;
    worst(points(geo.shape(), 20, 3).iter().map(|u| {
        let geom = geo.geometry(u, 1)?;
        let w = geom.anholonomy();
        let omega = geom.n_curvature();
        let mut m: f64 = 0.0;
        for ((a, i, j), o) in omega.indexed_iter() {
            m = m.max((w[[n + a, i, j]].value() - ctx.omega_sign() * o.value()).abs());
        }
        Ok(m)
    }))
}

fn frame_duality(_: &Ctx) -> Result<f64> {
    let mut m: f64 = 0.0;
    for id in catalog::BUILTIN_IDS {
        let geo = geometry(id)?;
        let d = geo.shape().dim();
        for u in points(geo.shape(), 10, 4) {
            let (e, e_inv) = geo.geometry(&u, 0)?.frame();
            let r = linalg::values(&e) * linalg::values(&e_inv) - DMatrix::identity(d, d);
            m = m.max(r.amax());
        }
    }
    Ok(m)
}

fn offdiagonal_congruence(_: &Ctx) -> Result<f64> {
    let geo = geometry("anisotropic")?;
    let (n, d) = (geo.shape().n, geo.shape().dim());
    worst(points(geo.shape(), 10, 5).iter().map(|u| {
        let big = dgeom_core::bundle::offdiagonal_metric(&geo, u)?;
        let geom = geo.geometry(u, 0)?;
        let (e, _) = geom.frame();
        let block = linalg::values(&e).transpose() * &big * linalg::values(&e);
        let expect = linalg::values(&geom.block_metric());
        let _ = (n, d);
        Ok((block - expect).amax())
    }))
}

// ------------------------------------------------------------ connection

const METRICITY_IDS: [&str; 4] = ["flat", "sphere2xflat:1.5", "anisotropic", "finsler:randers"];

fn metricity(_: &Ctx) -> Result<f64> {
    let mut m: f64 = 0.0;
    for id in METRICITY_IDS {
        let geo = geometry(id)?;
        for u in points(geo.shape(), 25, 6) {
            let c = connection::canonical_dconnection(&geo, &u)?;
            m = m.max(connection::metric_compatibility_residual(&c, &geo, &u)?);
        }
    }
    Ok(m)
}

/// Round-sphere Christoffel symbols in latitude coordinates:
/// `Γ^1_{22} = sin x cos x`, `Γ^2_{12} = Γ^2_{21} = −tan x`.
fn sphere_christoffel(x: f64) -> [[[f64; 2]; 2]; 2] {
    let mut g = [[[0.0; 2]; 2]; 2];
    g[0][1][1] = x.sin() * x.cos();
    g[1][0][1] = -x.tan();
    g[1][1][0] = -x.tan();
    g
}

fn sphere_reduction(_: &Ctx) -> Result<f64> {
    let geo = geometry("sphere2xflat:1.7")?;
    let mut m: f64 = 0.0;
    for u in points(geo.shape(), 10, 7) {
        let oracle = sphere_christoffel(u[0]);
        for sel in [ConnectionSelector::Canonical, ConnectionSelector::LeviCivita] {
            let c = connection::dconnection(&geo, &sel, &u)?;
            for ((i, j, k), v) in c.l_hh.indexed_iter() {
                m = m.max((v - oracle[i][j][k]).abs());
            }
            for v in c.c_hh_v.iter().chain(c.l_vv_h.iter()).chain(c.c_vv_v.iter()) {
                m = m.max(v.abs());
            }
            let t = curvature::d_torsion(&geo, &sel, &u)?;
            m = m.max(t.full.iter().fold(0.0, |a, x| a.max(x.abs())));
        }
    }
    Ok(m)
}

fn pure_gauge_coincidence(_: &Ctx) -> Result<f64> {
    let geo = geometry("puregauge")?;
    worst(points(geo.shape(), 20, 8).iter().map(|u| {
        let a = connection::canonical_dconnection(&geo, u)?;
        let b = connection::levi_civita_anholonomic(&geo, u)?;
        Ok(a.max_abs_difference(&b))
    }))
}

/// With Ω ≠ 0 the two connections differ exactly by
/// `½ g^{ik} Ω^a_{jk} h_{ca}` in the `C^i_{jc}` block.
fn levi_civita_omega_term(ctx: &Ctx) -> Result<f64> {
    let geo = geometry("anisotropic")?;
    let (n, m) = (geo.shape().n, geo.shape().m);
    worst(points(geo.shape(), 10, 9).iter().map(|u| {
        let a = connection::canonical_dconnection(&geo, u)?;
        let b = connection::levi_civita_anholonomic(&geo, u)?;
        let geom = geo.geometry(u, 1)?;
        let omega = geom.n_curvature().mapv(|j| j.value() * ctx.omega_sign());
        let ginv = linalg::checked_inverse(&linalg::values(&geom.g), "g")?;
        let h = linalg::values(&geom.h);
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                for c in 0..m {
                    let mut expect = 0.0;
                    for k in 0..n {
                        for aa in 0..m {
                            expect += 0.5 * ginv[(i, k)] * omega[[aa, j, k]] * h[(c, aa)];
                        }
                    }
                    worst = worst.max((b.c_hh_v[[i, j, c]] - a.c_hh_v[[i, j, c]] - expect).abs());
                }
            }
        }
        Ok(worst)
    }))
}

// ------------------------------------------------------------- curvature

fn sphere_scalar(_: &Ctx) -> Result<f64> {
    let r = 1.3;
    let geo = geometry(&format!("sphere2xflat:{r}"))?;
    worst(points(geo.shape(), 10, 10).iter().map(|u| {
        let c = curvature::d_curvature(&geo, &ConnectionSelector::Canonical, u)?;
        let ric = curvature::ricci_scalar(&c, &geo, u)?;
        Ok((ric.r_hat - 2.0 / (r * r)).abs())
    }))
}

fn flat_curvature(_: &Ctx) -> Result<f64> {
    let geo = geometry("flat")?;
    worst(points(geo.shape(), 10, 11).iter().map(|u| {
        let c = curvature::d_curvature(&geo, &ConnectionSelector::Canonical, u)?;
        let t = curvature::d_torsion(&geo, &ConnectionSelector::Canonical, u)?;
        Ok(c.max_abs().max(t.full.iter().fold(0.0, |a, x| a.max(x.abs()))))
    }))
}

/// The curvature from jets against the defining formula evaluated with
/// central differences of the connection coefficients.
fn finite_difference_curvature(_: &Ctx) -> Result<f64> {
    let geo = geometry("anisotropic")?;
    let sel = ConnectionSelector::Canonical;
    let shape = geo.shape();
    let (n, d) = (shape.n, shape.dim());
    worst(points(shape, 3, 12).iter().map(|u| {
        let jet_r = LocalGeometry::new(&geo, &sel, u, 2)?.curvature()?;
        let gamma_at = |v: &[f64]| connection::dconnection(&geo, &sel, v).map(|c| c.assemble());
        let step = 1e-4;
        let mut dgamma = Vec::with_capacity(d);
        for k in 0..d {
            let (mut p, mut m) = (u.clone(), u.clone());
            p[k] += step;
            m[k] -= step;
            dgamma.push((gamma_at(&p)? - gamma_at(&m)?) / (2.0 * step));
        }
        let geom = geo.geometry(u, 1)?;
        let nval = geom.n.mapv(|j| j.value());
        let w = geom.anholonomy().mapv(|j| j.value());
        let delta = |a: usize, b: usize, c: usize, t: usize| -> f64 {
            let mut v = dgamma[t][[a, b, c]];
            if t < n {
                for e in 0..shape.m {
                    v -= nval[[e, t]] * dgamma[n + e][[a, b, c]];
                }
            }
            v
        };
        let g0 = gamma_at(u)?;
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for t in 0..d {
                        let mut r = delta(a, b, c, t) - delta(a, b, t, c);
                        for f in 0..d {
                            r += g0[[f, b, c]] * g0[[a, f, t]] - g0[[f, b, t]] * g0[[a, f, c]] + g0[[a, b, f]] * w[[f, c, t]];
                        }
                        worst = worst.max((r - jet_r[[a, b, c, t]].value()).abs());
                    }
                }
            }
        }
        Ok(worst)
    }))
}

fn curvature_antisymmetry(_: &Ctx) -> Result<f64> {
    let mut m: f64 = 0.0;
    for id in ["anisotropic", "finsler:randers"] {
        let geo = geometry(id)?;
        for u in points(geo.shape(), 5, 13) {
            m = m.max(curvature::d_curvature(&geo, &ConnectionSelector::Canonical, &u)?.antisymmetry_residual());
        }
    }
    Ok(m)
}

fn ricci_asymmetry(_: &Ctx) -> Result<f64> {
    let geo = geometry("anisotropic")?;
    let c = curvature::d_curvature(&geo, &ConnectionSelector::Canonical, &[0.3, 0.5, -0.9, 0.6])?;
    Ok(curvature::ricci_scalar(&c, &geo, &[0.3, 0.5, -0.9, 0.6])?.mixed_asymmetry())
}

fn levi_civita_mixed_ricci(_: &Ctx) -> Result<f64> {
    let geo = geometry("sphere2xflat:1.2")?;
    worst(points(geo.shape(), 10, 14).iter().map(|u| {
        let c = curvature::d_curvature(&geo, &ConnectionSelector::LeviCivita, u)?;
        Ok(curvature::ricci_scalar(&c, &geo, u)?.max_mixed())
    }))
}

// --------------------------------------------------------------- finsler

fn finsler_homogeneity(_: &Ctx) -> Result<f64> {
    let mut m: f64 = 0.0;
    for id in finsler::BUILTIN_IDS {
        let f = finsler::builtin(id)?;
        for u in points(f.shape(), 10, 15) {
            let g0 = finsler::finsler_metric(&f, &u)?.g;
            let n0 = finsler::cartan_nconnection(&f, &u)?;
            for lambda in finsler::HOMOGENEITY_SCALES {
                let mut v = u.clone();
                v[f.shape().n..].iter_mut().for_each(|y| *y *= lambda);
                m = m.max((finsler::finsler_metric(&f, &v)?.g - &g0).amax());
                m = m.max((finsler::cartan_nconnection(&f, &v)? - &n0 * lambda).amax());
            }
        }
    }
    Ok(m)
}

/// Exact Christoffel symbols of the metric behind the `riemann` builtin.
fn riemann_builtin_christoffel(x: &[f64]) -> [[[f64; 2]; 2]; 2] {
    let (x1, x2) = (x[0], x[1]);
    let g = DMatrix::from_row_slice(2, 2, &[1.0 + 0.2 * x1 * x1, 0.1 * x1 * x2, 0.1 * x1 * x2, 1.0 + 0.3 * x2.sin().powi(2)]);
    let ginv = g.try_inverse().expect("positive definite");
    // dg[k][(i, j)] = ∂_k g_ij
    let dg = [
        DMatrix::from_row_slice(2, 2, &[0.4 * x1, 0.1 * x2, 0.1 * x2, 0.0]),
        DMatrix::from_row_slice(2, 2, &[0.0, 0.1 * x1, 0.1 * x1, 0.6 * x2.sin() * x2.cos()]),
    ];
    let mut out = [[[0.0; 2]; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, col) in row.iter_mut().enumerate() {
            for (k, v) in col.iter_mut().enumerate() {
                *v = 0.5 * (0..2).map(|l| ginv[(i, l)] * (dg[j][(l, k)] + dg[k][(l, j)] - dg[l][(j, k)])).sum::<f64>();
            }
        }
    }
    out
}

fn riemannian_reduction(_: &Ctx) -> Result<f64> {
    let f = finsler::builtin("riemann")?;
    worst(points(f.shape(), 10, 16).iter().map(|u| {
        let oracle = riemann_builtin_christoffel(u);
        let nc = finsler::cartan_nconnection(&f, u)?;
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let expect: f64 = (0..2).map(|k| oracle[i][j][k] * u[2 + k]).sum();
                m = m.max((nc[(i, j)] - expect).abs());
            }
        }
        Ok(m)
    }))
}

fn kahler_closure(_: &Ctx) -> Result<f64> {
    let mut m: f64 = 0.0;
    for id in finsler::BUILTIN_IDS {
        let f = finsler::builtin(id)?;
        for u in points(f.shape(), 10, 17) {
            m = m.max(finsler::kahler_form_closure(&f, &u)?);
        }
    }
    Ok(m)
}

// -------------------------------------------------------------- spectral

fn clifford(_: &Ctx) -> Result<f64> {
    let mut m: f64 = 0.0;
    for id in ["sphere2xflat:1.3", "anisotropic", "sphere2xflat:0.8,3", "flat:3,2"] {
        let geo = geometry(id)?;
        let d = geo.shape().dim();
        let gammas = GammaSet::new(d)?;
        for u in points(geo.shape(), 5, 18) {
            let v = spectral::vielbein(&geo, &u, VielbeinMethod::Cholesky)?;
            let curved = spectral::gamma_frame(&gammas, &v)?;
            let ginv = linalg::checked_inverse(&linalg::values(&geo.geometry(&u, 0)?.block_metric()), "metric")?;
            m = m.max(spectral::anticommutator_residual(&curved, &(ginv * 2.0)));
        }
    }
    Ok(m)
}

fn spin_defining(_: &Ctx) -> Result<f64> {
    let mut m: f64 = 0.0;
    for id in ["sphere2xflat:1.3", "anisotropic", "sphere2xflat:0.8,3"] {
        let geo = geometry(id)?;
        for u in points(geo.shape(), 5, 19) {
            let s = spectral::spin_connection(&geo, &ConnectionSelector::Canonical, &u)?;
            m = m.max(s.defining_residual);
        }
    }
    Ok(m)
}

/// Flat `D²ψ` against `Σ_a ∂_a² ψ` (Hermitian gammas with `{γ, γ} = 2δ`).
fn flat_lichnerowicz(_: &Ctx) -> Result<f64> {
    let geo = geometry("flat")?;
    let shape = geo.shape();
    let size = spectral::spinor_size(shape);
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut m: f64 = 0.0;
    for _ in 0..5 {
        let mut comps = Vec::with_capacity(size);
        let mut srcs = Vec::with_capacity(size);
        for _ in 0..size {
            let mut field = || {
                let c: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
                format!(
                    "{:?}*sin({:?}*x1 + y2) + {:?}*x2^2*y1 + {:?}*exp(0.5*y2)*x1 + {:?}",
                    c[0], c[1], c[2], c[3], c[4]
                )
            };
            let (re, im) = (field(), field());
            comps.push((parse_field(&re, shape)?, parse_field(&im, shape)?));
            srcs.push((re, im));
        }
        let psi = SpinorField::new(comps.clone());
        for u in points(shape, 2, rng.gen()) {
            let d2 = spectral::dirac_squared(&psi, &geo, &ConnectionSelector::Canonical, &u)?;
            for (s, (re, im)) in comps.iter().enumerate() {
                let lap = |f: &dgeom_core::ScalarField| -> Result<f64> {
                    let j = f.eval_jet(&u, 2)?;
                    Ok((0..shape.dim()).map(|a| j.hessian(a, a)).sum())
                };
                let expect = Complex64::new(lap(re)?, lap(im)?);
                m = m.max((d2[s] - expect).norm());
            }
        }
    }
    Ok(m)
}

fn cutoff_moments(_: &Ctx) -> Result<f64> {
    let c = Cutoff::characteristic().moments()?;
    let cancel = Cutoff::cancelling(1.7).moments()?;
    Ok((c.f0 - 0.5).abs().max((c.f2 - 1.0).abs()).max(cancel.f0.abs()))
}

fn sphere_a2(_: &Ctx) -> Result<f64> {
    let (r, cutoff) = (1.3, 2.0);
    let geo = geometry(&format!("sphere2xflat:{r}"))?;
    let d = geo.shape().dim();
    let trace = 2f64.powi(d as i32 / 2);
    let expect = cutoff * cutoff * (4.0 * PI).powf(-(d as f64) / 2.0) * (2.0 / (r * r) / 12.0) * trace;
    worst(points(geo.shape(), 5, 21).iter().map(|u| {
        let dens = spectral::seeley_densities(&geo, &ConnectionSelector::Canonical, cutoff, u)?;
        Ok((dens.a2 - expect).abs())
    }))
}

// ----------------------------------------------------------------- ncalg

fn random_poly(rng: &mut ChaCha8Rng, nvars: usize, terms: usize, max_degree: u32) -> Poly {
    let mut p = Poly::zero(nvars);
    for _ in 0..terms {
        let mut e = vec![0u32; nvars];
        let deg = rng.gen_range(0..=max_degree);
        for _ in 0..deg {
            e[rng.gen_range(0..nvars)] += 1;
        }
        let c = Complex64::new(rng.gen_range(-3..=3) as f64, rng.gen_range(-3..=3) as f64);
        p.add_term(e, c);
    }
    p
}

/// `|a − b|` relative to the size of the operands.
fn relative_gap(a: &Poly, b: &Poly) -> f64 {
    (a - b).max_abs() / a.max_abs().max(b.max_abs()).max(1.0)
}

fn moyal_associativity(_: &Ctx) -> Result<f64> {
    let theta = ThetaMatrix::from_upper(4, &[0.5, -0.25, 1.0, 0.75, -0.5, 0.25])?;
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let mut m: f64 = 0.0;
    for _ in 0..20 {
        let [f, g, h] = [0, 1, 2].map(|_| random_poly(&mut rng, 4, 5, 4));
        let left = moyal_star(&moyal_star(&f, &g, &theta)?, &h, &theta)?;
        let right = moyal_star(&f, &moyal_star(&g, &h, &theta)?, &theta)?;
        m = m.max(relative_gap(&left, &right));
    }
    Ok(m)
}

fn moyal_coordinates(_: &Ctx) -> Result<f64> {
    let theta = ThetaMatrix::from_upper(4, &[0.3, -0.7, 1.1, 0.2, -0.4, 0.9])?;
    let product = StarProduct::Moyal(theta.clone());
    let mut m: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let c = star_commutator(&Poly::var(4, i), &Poly::var(4, j), &product)?;
            let expect = Poly::constant(4, Complex64::new(0.0, theta.get(i, j)));
            m = m.max((&c - &expect).max_abs());
        }
    }
    Ok(m)
}

fn lie_commutators(_: &Ctx) -> Result<f64> {
    let theta = ThetaMatrix::from_upper(3, &[0.5, -1.0, 0.25])?;
    let mut m: f64 = 0.0;
    for lie in [LieStructure::su2(), LieStructure::heisenberg(&theta)] {
        let n = lie.dim();
        let product = StarProduct::Lie {
            structure: lie.clone(),
            order: 1,
        };
        for i in 0..n {
            for j in 0..n {
                let c = star_commutator(&Poly::var(n, i), &Poly::var(n, j), &product)?;
                let mut expect = Poly::zero(n);
                for k in 0..n {
                    expect = &expect + &Poly::var(n, k).scale(Complex64::new(0.0, lie.get(i, j, k)));
                }
                m = m.max((&c - &expect).max_abs());
            }
        }
        // the second-order product keeps the same commutator on generators
        let f = Poly::var(n, 0);
        let g = Poly::var(n, 1);
        let c2 = &lie_star(&f, &g, &lie, 2)? - &lie_star(&g, &f, &lie, 2)?;
        let c1 = star_commutator(&f, &g, &product)?;
        m = m.max((&c2 - &c1).max_abs());
        m = m.max(lie.jacobi_residual());
    }
    Ok(m)
}

fn qplane_associativity(_: &Ctx) -> Result<f64> {
    let q = Complex64::new(1.3, 0.4);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut m: f64 = 0.0;
    for ordering in [QOrdering::Normal, QOrdering::Symmetric] {
        for _ in 0..30 {
            let [f, g, h] = [0, 1, 2].map(|_| {
                let e = vec![rng.gen_range(0..4u32), rng.gen_range(0..4u32)];
                Poly::monomial(2, e, Complex64::new(1.0, 0.0))
            });
            let left = qplane_star(&qplane_star(&f, &g, q, ordering)?, &h, q, ordering)?;
            let right = qplane_star(&f, &qplane_star(&g, &h, q, ordering)?, q, ordering)?;
            m = m.max(relative_gap(&left, &right));
        }
    }
    Ok(m)
}

// ----------------------------------------------------------------- gauge

fn de_sitter_commutators(_: &Ctx) -> Result<f64> {
    let alg = DeSitterAlgebra::new(DEFAULT_ETA, 1.3)?;
    let lor = DeSitterAlgebra::new(LORENTZIAN_ETA, 0.7)?;
    Ok([
        alg.rotation_commutator_residual(),
        alg.split_residual(),
        alg.structure_residual(),
        alg.jacobi_matrix_residual(),
        alg.structure.jacobi_residual(),
        lor.rotation_commutator_residual(),
        lor.split_residual_general(),
        lor.structure_residual(),
        lor.jacobi_matrix_residual(),
    ]
    .into_iter()
    .fold(0.0, f64::max))
}

fn sw_zero_theta(ctx: &Ctx) -> Result<f64> {
    ctx.sw_residual("expand_at_zero_theta")
}

fn sw_linearity(ctx: &Ctx) -> Result<f64> {
    Ok(ctx.sw_residual("expand_linearity")?.max(ctx.sw_residual("corrected_curvature_linearity")?))
}

fn sw_decay(ctx: &Ctx) -> Result<f64> {
    ctx.sw_residual("scaling_slope_deviation")
}

fn sw_closure(ctx: &Ctx) -> Result<f64> {
    ctx.sw_residual("closure")
}

fn sw_covariance(ctx: &Ctx) -> Result<f64> {
    Ok(ctx.sw_residual("covariance")?.max(ctx.sw_residual("strength_consistency")?))
}

fn corrected_antisymmetry(ctx: &Ctx) -> Result<f64> {
    ctx.sw_residual("corrected_curvature_antisymmetry")
}

fn bridge(_: &Ctx) -> Result<f64> {
    let alg = DeSitterAlgebra::default_euclidean(2.0)?;
    let mut m: f64 = 0.0;
    for id in ["sphere2xflat:1.4", "anisotropic", "flat"] {
        let geo = geometry(id)?;
        for u in points(geo.shape(), 4, 22) {
            m = m.max(curvature_bridge(&geo, &ConnectionSelector::Canonical, &alg, 1.5, &u)?.residual);
        }
    }
    Ok(m)
}

fn checks() -> Vec<Check> {
    use Bound::{AtLeast, AtMost};
    use Suite::*;
    let c = |suite, name, bound, run| Check { suite, name, bound, run };
    vec![
        c(Bundle, "torsion/Ω cross-check", AtMost(1e-10), torsion_omega),
        c(Bundle, "commutator identity [δ_α, δ_β] = W δ", AtMost(1e-8), commutator_identity),
        c(Bundle, "anholonomy W equals Ω", AtMost(1e-10), anholonomy_is_omega),
        c(Bundle, "adapted frame duality", AtMost(1e-12), frame_duality),
        c(Bundle, "off-diagonal metric congruence", AtMost(1e-12), offdiagonal_congruence),
        c(Connection, "canonical metricity on builtins", AtMost(1e-9), metricity),
        c(Connection, "sphere reduction to Christoffel symbols", AtMost(1e-10), sphere_reduction),
        c(Connection, "pure-gauge coincidence", AtMost(1e-10), pure_gauge_coincidence),
        c(Connection, "Levi-Civita minus canonical is the Ω term", AtMost(1e-10), levi_civita_omega_term),
        c(Curvature, "sphere scalar curvature 2/r²", AtMost(1e-8), sphere_scalar),
        c(Curvature, "flat curvature and torsion vanish", AtMost(1e-12), flat_curvature),
        c(Curvature, "jet curvature matches finite differences", AtMost(1e-5), finite_difference_curvature),
        c(Curvature, "curvature antisymmetry", AtMost(1e-10), curvature_antisymmetry),
        c(Curvature, "anisotropic Ricci is not symmetric", AtLeast(1e-6), ricci_asymmetry),
        c(Curvature, "Levi-Civita mixed Ricci blocks vanish", AtMost(1e-10), levi_civita_mixed_ricci),
        c(Finsler, "metric and N homogeneity", AtMost(1e-9), finsler_homogeneity),
        c(Finsler, "Riemannian reduction N = Γ y", AtMost(1e-8), riemannian_reduction),
        c(Finsler, "Kähler form closure", AtMost(1e-7), kahler_closure),
        c(Spectral, "Clifford relation in d = 4, 5", AtMost(1e-12), clifford),
        c(Spectral, "spin connection defining relation", AtMost(1e-9), spin_defining),
        c(Spectral, "flat D² is the Laplacian", AtMost(1e-6), flat_lichnerowicz),
        c(Spectral, "cutoff moments and cancellation", AtMost(1e-15), cutoff_moments),
        c(Spectral, "sphere a2 density", AtMost(1e-9), sphere_a2),
        c(Ncalg, "Moyal associativity", AtMost(1e-12), moyal_associativity),
        c(Ncalg, "Moyal coordinate commutators", AtMost(1e-15), moyal_coordinates),
        c(Ncalg, "Lie-type commutators and Jacobi", AtMost(1e-12), lie_commutators),
        c(Ncalg, "quantum-plane associativity", AtMost(1e-12), qplane_associativity),
        c(Gauge, "de Sitter commutators and Jacobi", AtMost(1e-12), de_sitter_commutators),
        c(Gauge, "expansion vanishes at θ = 0", AtMost(1e-12), sw_zero_theta),
        c(Gauge, "expansion is linear in θ", AtMost(1e-12), sw_linearity),
        c(Gauge, "gauge-equivalence residual decays like θ²", AtMost(0.1), sw_decay),
        c(Gauge, "gauge closure at order θ", AtMost(1e-9), sw_closure),
        c(Gauge, "covariance of the corrected field strength", AtMost(1e-9), sw_covariance),
        c(Gauge, "corrected field strength antisymmetry", AtMost(1e-12), corrected_antisymmetry),
        c(Gauge, "gauge curvature matches the d-curvature", AtMost(1e-8), bridge),
    ]
}

/// Runs the suite and returns one result per check, in suite order.
pub fn run_suite(suite: Suite, inject: Option<Injection>) -> Vec<CheckResult> {
    let members = suite.members();
    let selected: Vec<Check> = checks().into_iter().filter(|c| members.contains(&c.suite)).collect();
    let ctx = Ctx {
        inject,
        sw: OnceLock::new(),
    };
    selected
        .par_iter()
        .map(|c| CheckResult {
            suite: c.suite.name(),
            name: c.name,
            bound: c.bound,
            value: (c.run)(&ctx).map_err(|e| e.to_string()),
        })
        .collect()
}

/// First failing check, if any.
pub fn first_failure(results: &[CheckResult]) -> Option<&CheckResult> {
    results.iter().find(|r| !r.pass())
}
