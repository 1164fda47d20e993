//! Acceptance suite: fourteen criteria, each checked against an oracle that
//! is computed here rather than borrowed from the library. Prints one line
//! per criterion and exits nonzero if any fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use dgeom_core::catalog::{self, Geometry};
use dgeom_core::connection::{self, ConnectionSelector};
use dgeom_core::curvature::{self, LocalGeometry};
use dgeom_core::dsl::{parse_field, BundleShape, ScalarField};
use dgeom_core::finsler;
use dgeom_core::gauge::{
    closure_check, curvature_bridge, sw_expand, sw_residual_scaling, DeSitterAlgebra, GaugeLevel1, DEFAULT_ETA,
    LORENTZIAN_ETA,
};
use dgeom_core::ncalg::{
    lie_star, moyal_star, qplane_star, star_commutator, LieStructure, Poly, QOrdering, StarProduct, ThetaMatrix,
};
use dgeom_core::spectral::{self, Cutoff, GammaSet, SpinorField, VielbeinMethod};
use dgeom_core::{linalg, sample_points, GeometrySource};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Outcome of one criterion: the worst measured quantity per sub-check.
type Outcome = Vec<(&'static str, f64, bool)>;

fn at_most(name: &'static str, v: f64, tol: f64) -> (&'static str, f64, bool) {
    (name, v, v <= tol)
}

fn geo(id: &str) -> Geometry {
    catalog::builtin(id).unwrap()
}

fn max_over<T>(items: impl IntoIterator<Item = T>, f: impl Fn(T) -> f64) -> f64 {
    items.into_iter().map(f).fold(0.0, f64::max)
}

fn tensor_gap<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    a.into_iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Round sphere of radius r in latitude coordinates, metric diag(r², r² cos² x1).
fn sphere_christoffel(x: f64) -> [[[f64; 2]; 2]; 2] {
    let mut g = [[[0.0; 2]; 2]; 2];
    g[0][1][1] = x.sin() * x.cos();
    g[1][0][1] = -x.tan();
    g[1][1][0] = -x.tan();
    g
}

fn random_expr(rng: &mut ChaCha8Rng, shape: BundleShape) -> String {
    let vars: Vec<String> = (1..=shape.n).map(|i| format!("x{i}")).chain((1..=shape.m).map(|a| format!("y{a}"))).collect();
    let pick = |rng: &mut ChaCha8Rng| vars[rng.gen_range(0..vars.len())].clone();
    let (a, b, c, d) = (pick(rng), pick(rng), pick(rng), pick(rng));
    let k: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.5..1.5)).collect();
    format!(
        "{:?}*sin({a}*{b}) + {:?}*exp(0.3*{c})*{d}^2 + {:?}*cos({:?}*{a} + {c}) + {:?}*{b}*{d}",
        k[0], k[1], k[2], k[3], k[0] * k[3]
    )
}

// 1
fn metricity() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for id in ["flat", "sphere2xflat:1.5", "anisotropic", "finsler:randers"] {
        let g = geo(id);
        let d = g.shape().dim();
        for u in sample_points(g.shape(), 100, 1) {
            let gamma = connection::canonical_dconnection(&g, &u).unwrap().assemble();
            let geom = g.geometry(&u, 1).unwrap();
            let metric = geom.block_metric();
            // D_c g_ab = δ_c g_ab − Γ^t_{ac} g_tb − Γ^t_{bc} g_at
            for a in 0..d {
                for b in 0..d {
                    for c in 0..d {
                        let mut v = geom.delta(&metric[(a, b)], c).value();
                        for t in 0..d {
                            v -= gamma[[t, a, c]] * metric[(t, b)].value() + gamma[[t, b, c]] * metric[(a, t)].value();
                        }
                        worst = worst.max(v.abs());
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    vec![at_most("max |D g|", worst, 1e-9), at_most("runtime [s]", secs, 30.0)]
}

// 2
fn reduction() -> Outcome {
    let g = geo("sphere2xflat:1.7");
    let (mut coef, mut other, mut torsion): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for u in sample_points(g.shape(), 25, 2) {
        let oracle = sphere_christoffel(u[0]);
        for sel in [ConnectionSelector::Canonical, ConnectionSelector::LeviCivita] {
            let c = connection::dconnection(&g, &sel, &u).unwrap();
            for ((i, j, k), v) in c.l_hh.indexed_iter() {
                coef = coef.max((v - oracle[i][j][k]).abs());
            }
            other = other.max(max_over(c.c_hh_v.iter().chain(&c.l_vv_h).chain(&c.c_vv_v), |x| x.abs()));
            let t = curvature::d_torsion(&g, &sel, &u).unwrap();
            torsion = torsion.max(max_over(t.full.iter(), |x| x.abs()));
        }
    }
    vec![
        at_most("horizontal coefficients vs Christoffel", coef, 1e-10),
        at_most("remaining blocks", other, 1e-10),
        at_most("torsion", torsion, 1e-10),
    ]
}

// 3
fn coincidence() -> Outcome {
    let g = geo("puregauge");
    let (mut diff, mut omega): (f64, f64) = (0.0, 0.0);
    for u in sample_points(g.shape(), 50, 3) {
        let a = connection::canonical_dconnection(&g, &u).unwrap();
        let b = connection::levi_civita_anholonomic(&g, &u).unwrap();
        diff = diff.max(tensor_gap(a.assemble().iter(), b.assemble().iter()));
        omega = omega.max(max_over(g.geometry(&u, 1).unwrap().n_curvature().iter(), |j| j.value().abs()));
    }
    vec![at_most("Ω", omega, 1e-12), at_most("canonical − Levi-Civita", diff, 1e-10)]
}

// 4
fn anholonomy() -> Outcome {
    let g = geo("anisotropic");
    let shape = g.shape();
    let (n, m, d) = (shape.n, shape.m, shape.dim());
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let fields: Vec<ScalarField> = (0..10).map(|_| parse_field(&random_expr(&mut rng, shape), shape).unwrap()).collect();
    let (mut comm, mut w_omega): (f64, f64) = (0.0, 0.0);
    for u in sample_points(shape, 50, 4) {
        let geom = g.geometry(&u, 2).unwrap();
        let w = geom.anholonomy();
        for f in &fields {
            let f = f.eval_jet(&u, 2).unwrap();
            let df: Vec<_> = (0..d).map(|c| geom.delta(&f, c)).collect();
            for a in 0..d {
                for b in 0..d {
                    let lhs = (geom.delta(&df[b], a) - geom.delta(&df[a], b)).value();
                    let rhs: f64 = (0..d).map(|c| w[[c, a, b]].value() * df[c].value()).sum();
                    comm = comm.max((lhs - rhs).abs());
                }
            }
        }
        // Ω from the N coefficients: [δ_i, δ_j] = (δ_j N_i^a − δ_i N_j^a) ∂_a
        let nn = &geom.n;
        let omega = g.geometry(&u, 1).unwrap().n_curvature();
        for a in 0..m {
            for i in 0..n {
                for j in 0..n {
                    let direct = (geom.delta(&nn[[a, i]], j) - geom.delta(&nn[[a, j]], i)).value();
                    w_omega = w_omega.max((w[[n + a, i, j]].value() - direct).abs());
                    w_omega = w_omega.max((omega[[a, i, j]].value() - direct).abs());
                }
            }
        }
    }
    vec![at_most("[δ_α, δ_β] f − W δ f", comm, 1e-8), at_most("W^a_ij − Ω^a_ij", w_omega, 1e-10)]
}

/// `R̂ = g^{ij} R^k_{ikj}` contracted here from the full d-curvature.
fn scalar_from_full(g: &Geometry, sel: &ConnectionSelector, u: &[f64]) -> f64 {
    let n = g.shape().n;
    let full = LocalGeometry::new(g, sel, u, 2).unwrap().curvature().unwrap();
    let gm = linalg::values(&g.geometry(u, 0).unwrap().g);
    let ginv = gm.try_inverse().unwrap();
    let mut r = 0.0;
    for i in 0..n {
        for j in 0..n {
            let rij: f64 = (0..n).map(|k| full[[k, i, j, k]].value()).sum();
            r += ginv[(i, j)] * rij;
        }
    }
    r
}

// 5
fn curvature_sanity() -> Outcome {
    let r = 1.3;
    let sphere = geo(&format!("sphere2xflat:{r}"));
    let scalar = max_over(sample_points(sphere.shape(), 20, 5), |u| {
        let lib = curvature::ricci_scalar(
            &curvature::d_curvature(&sphere, &ConnectionSelector::Canonical, &u).unwrap(),
            &sphere,
            &u,
        )
        .unwrap()
        .r_hat;
        (lib - 2.0 / (r * r)).abs().max((scalar_from_full(&sphere, &ConnectionSelector::Canonical, &u) - 2.0 / (r * r)).abs())
    });
    let flat = geo("flat");
    let flat_max = max_over(sample_points(flat.shape(), 20, 5), |u| {
        let full = LocalGeometry::new(&flat, &ConnectionSelector::Canonical, &u, 2).unwrap().curvature().unwrap();
        max_over(full.iter(), |j| j.value().abs())
    });
    vec![
        at_most("sphere R̂ − 2/r²", scalar, 1e-8),
        at_most("flat curvature", flat_max, 1e-12),
        at_most("jet vs finite-difference curvature", finite_difference_gap(), 1e-5),
    ]
}

/// Curvature from central differences of the connection coefficients:
/// `R^a_{bct} = δ_t Γ^a_{bc} − δ_c Γ^a_{bt} + Γ^f_{bc} Γ^a_{ft} − Γ^f_{bt} Γ^a_{fc} + Γ^a_{bf} W^f_{ct}`.
fn finite_difference_gap() -> f64 {
    let g = geo("anisotropic");
    let sel = ConnectionSelector::Canonical;
    let shape = g.shape();
    let (n, m, d) = (shape.n, shape.m, shape.dim());
    max_over(sample_points(shape, 5, 55), |u| {
        let jet_r = LocalGeometry::new(&g, &sel, &u, 2).unwrap().curvature().unwrap();
        let gamma_at = |v: &[f64]| connection::dconnection(&g, &sel, v).unwrap().assemble();
        let h = 1e-4;
        let dg: Vec<_> = (0..d)
            .map(|k| {
                let (mut p, mut q) = (u.clone(), u.clone());
                p[k] += h;
                q[k] -= h;
                (gamma_at(&p) - gamma_at(&q)) / (2.0 * h)
            })
            .collect();
        let geom = g.geometry(&u, 1).unwrap();
        let nv = geom.n.mapv(|j| j.value());
        let w = geom.anholonomy().mapv(|j| j.value());
        let delta = |a, b, c, t: usize| {
            let mut v = dg[t][[a, b, c]];
            if t < n {
                for e in 0..m {
                    v -= nv[[e, t]] * dg[n + e][[a, b, c]];
                }
            }
            v
        };
        let g0 = gamma_at(&u);
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
        worst
    })
}

/// `(¹P_ai, ²P_ia)` contracted from the full curvature:
/// `¹P_ai = R^b_{a i b}`, `²P_ia = R^k_{i k a}`.
fn mixed_ricci(g: &Geometry, sel: &ConnectionSelector, u: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, m) = (g.shape().n, g.shape().m);
    let full = LocalGeometry::new(g, sel, u, 2).unwrap().curvature().unwrap();
    let p1 = DMatrix::from_fn(m, n, |a, i| (0..m).map(|b| full[[n + b, n + a, i, n + b]].value()).sum());
    let p2 = DMatrix::from_fn(n, m, |i, a| (0..n).map(|k| full[[k, i, k, n + a]].value()).sum());
    (p1, p2)
}

// 6
fn ricci_asymmetry() -> Outcome {
    let g = geo("anisotropic");
    let asym = max_over(sample_points(g.shape(), 5, 6), |u| {
        let (p1, p2) = mixed_ricci(&g, &ConnectionSelector::Canonical, &u);
        (p1 - p2.transpose()).amax()
    });
    let sphere = geo("sphere2xflat:1.2");
    let lc = max_over(sample_points(sphere.shape(), 10, 6), |u| {
        let (p1, p2) = mixed_ricci(&sphere, &ConnectionSelector::LeviCivita, &u);
        p1.amax().max(p2.amax())
    });
    vec![("max |¹P − ²P| (must exceed 1e-6)", asym, asym > 1e-6), at_most("Levi-Civita mixed Ricci", lc, 1e-10)]
}

/// Christoffel symbols of g = [[1 + 0.2 x1², 0.1 x1 x2], [0.1 x1 x2, 1 + 0.3 sin² x2]].
fn riemann_christoffel(x1: f64, x2: f64) -> [[[f64; 2]; 2]; 2] {
    let g = DMatrix::from_row_slice(2, 2, &[1.0 + 0.2 * x1 * x1, 0.1 * x1 * x2, 0.1 * x1 * x2, 1.0 + 0.3 * x2.sin().powi(2)]);
    let gi = g.try_inverse().unwrap();
    let dg = [
        DMatrix::from_row_slice(2, 2, &[0.4 * x1, 0.1 * x2, 0.1 * x2, 0.0]),
        DMatrix::from_row_slice(2, 2, &[0.0, 0.1 * x1, 0.1 * x1, 0.6 * x2.sin() * x2.cos()]),
    ];
    let mut out = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                out[i][j][k] = 0.5 * (0..2).map(|l| gi[(i, l)] * (dg[j][(l, k)] + dg[k][(l, j)] - dg[l][(j, k)])).sum::<f64>();
            }
        }
    }
    out
}

// 7
fn finsler_checks() -> Outcome {
    let (mut hom, mut closure): (f64, f64) = (0.0, 0.0);
    for id in finsler::BUILTIN_IDS {
        let f = finsler::builtin(id).unwrap();
        let n = f.shape().n;
        for u in sample_points(f.shape(), 20, 7) {
            let g0 = finsler::finsler_metric(&f, &u).unwrap().g;
            for lambda in [0.5, 2.0, 3.0] {
                let mut v = u.clone();
                v[n..].iter_mut().for_each(|y| *y *= lambda);
                hom = hom.max((finsler::finsler_metric(&f, &v).unwrap().g - &g0).amax());
            }
            closure = closure.max(finsler::kahler_form_closure(&f, &u).unwrap());
        }
    }
    let f = finsler::builtin("riemann").unwrap();
    let red = max_over(sample_points(f.shape(), 20, 7), |u| {
        let gam = riemann_christoffel(u[0], u[1]);
        let nc = finsler::cartan_nconnection(&f, &u).unwrap();
        let mut w: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let expect: f64 = (0..2).map(|k| gam[i][j][k] * u[2 + k]).sum();
                w = w.max((nc[(i, j)] - expect).abs());
            }
        }
        w
    });
    vec![
        at_most("g(λy) − g(y)", hom, 1e-9),
        at_most("N − Γ y", red, 1e-8),
        ("Kähler closure (< 1e-7)", closure, closure < 1e-7),
    ]
}

fn anticommutator_gap(gs: &[DMatrix<Complex64>], target: &DMatrix<f64>) -> f64 {
    let mut w: f64 = 0.0;
    for a in 0..gs.len() {
        for b in 0..gs.len() {
            let ac = &gs[a] * &gs[b] + &gs[b] * &gs[a];
            for i in 0..ac.nrows() {
                for j in 0..ac.ncols() {
                    let expect = if i == j { 2.0 * target[(a, b)] } else { 0.0 };
                    w = w.max((ac[(i, j)] - Complex64::new(expect, 0.0)).norm());
                }
            }
        }
    }
    w
}

// 8
fn clifford_spin() -> Outcome {
    let (mut cliff, mut spin): (f64, f64) = (0.0, 0.0);
    for id in ["sphere2xflat:1.3", "anisotropic", "sphere2xflat:0.8,3", "flat:3,2"] {
        let g = geo(id);
        let d = g.shape().dim();
        assert!(d == 4 || d == 5);
        let gammas = GammaSet::new(d).unwrap();
        for u in sample_points(g.shape(), 10, 8) {
            let v = spectral::vielbein(&g, &u, VielbeinMethod::Cholesky).unwrap();
            let curved = spectral::gamma_frame(&gammas, &v).unwrap();
            let ginv = linalg::values(&g.geometry(&u, 0).unwrap().block_metric()).try_inverse().unwrap();
            cliff = cliff.max(anticommutator_gap(&curved, &ginv));
            spin = spin.max(spectral::spin_connection(&g, &ConnectionSelector::Canonical, &u).unwrap().defining_residual);
        }
        cliff = cliff.max(anticommutator_gap(&gammas.matrices, &DMatrix::identity(d, d)));
    }
    vec![
        at_most("{γ^α, γ^β} − 2 g^{αβ}", cliff, 1e-12),
        at_most("spin defining residual", spin, 1e-9),
        at_most("flat D² − Laplacian", lichnerowicz(), 1e-6),
    ]
}

fn lichnerowicz() -> f64 {
    let g = geo("flat");
    let shape = g.shape();
    let size = spectral::spinor_size(shape);
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let comps: Vec<(ScalarField, ScalarField)> = (0..size)
            .map(|_| {
                let re = parse_field(&random_expr(&mut rng, shape), shape).unwrap();
                let im = parse_field(&random_expr(&mut rng, shape), shape).unwrap();
                (re, im)
            })
            .collect();
        let psi = SpinorField::new(comps.clone());
        for u in sample_points(shape, 4, rng.gen()) {
            let d2 = spectral::dirac_squared(&psi, &g, &ConnectionSelector::Canonical, &u).unwrap();
            for (s, (re, im)) in comps.iter().enumerate() {
                let lap = |f: &ScalarField| {
                    let j = f.eval_jet(&u, 2).unwrap();
                    (0..shape.dim()).map(|a| j.hessian(a, a)).sum::<f64>()
                };
                worst = worst.max((d2[s] - Complex64::new(lap(re), lap(im))).norm());
            }
        }
    }
    worst
}

// 9
fn spectral_checks() -> Outcome {
    let c = Cutoff::characteristic().moments().unwrap();
    let cancel = Cutoff::cancelling(1.7).moments().unwrap();
    let (r, lambda) = (1.3, 2.0);
    let g = geo(&format!("sphere2xflat:{r}"));
    let d = g.shape().dim();
    let tr_i = 2f64.powi(d as i32 / 2);
    let expect = lambda * lambda * (4.0 * PI).powf(-(d as f64) / 2.0) * (2.0 / (r * r) / 12.0) * tr_i;
    let a2 = max_over(sample_points(g.shape(), 10, 9), |u| {
        (spectral::seeley_densities(&g, &ConnectionSelector::Canonical, lambda, &u).unwrap().a2 - expect).abs()
    });
    vec![
        at_most("|f0 − 1/2|", (c.f0 - 0.5).abs(), 1e-12),
        at_most("|f2 − 1|", (c.f2 - 1.0).abs(), 1e-12),
        at_most("Λ⁴ coefficient with α = β²", cancel.f0.abs(), 0.0),
        at_most("sphere a2 density", a2, 1e-9),
    ]
}

fn random_poly(rng: &mut ChaCha8Rng, nvars: usize) -> Poly {
    let mut p = Poly::zero(nvars);
    for _ in 0..6 {
        let mut e = vec![0u32; nvars];
        for _ in 0..rng.gen_range(0..=4) {
            e[rng.gen_range(0..nvars)] += 1;
        }
        p.add_term(e, Complex64::new(rng.gen_range(-4..=4) as f64, rng.gen_range(-4..=4) as f64));
    }
    p
}

fn rel_gap(a: &Poly, b: &Poly) -> f64 {
    (a - b).max_abs() / a.max_abs().max(b.max_abs()).max(1.0)
}

// 10
fn star_products() -> Outcome {
    let theta = ThetaMatrix::from_upper(4, &[0.5, -0.25, 1.0, 0.75, -0.5, 0.125]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut assoc: f64 = 0.0;
    for _ in 0..50 {
        let (f, g, h) = (random_poly(&mut rng, 4), random_poly(&mut rng, 4), random_poly(&mut rng, 4));
        let l = moyal_star(&moyal_star(&f, &g, &theta).unwrap(), &h, &theta).unwrap();
        let r = moyal_star(&f, &moyal_star(&g, &h, &theta).unwrap(), &theta).unwrap();
        assoc = assoc.max(rel_gap(&l, &r));
    }
    let mut coord: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let c = star_commutator(&Poly::var(4, i), &Poly::var(4, j), &StarProduct::Moyal(theta.clone())).unwrap();
            coord = coord.max((c.coefficient(&[0, 0, 0, 0]) - Complex64::new(0.0, theta.get(i, j))).norm());
            coord = coord.max((&c - &Poly::constant(4, c.coefficient(&[0, 0, 0, 0]))).max_abs());
        }
    }
    let mut lie_gap: f64 = 0.0;
    let heis = LieStructure::heisenberg(&ThetaMatrix::from_upper(2, &[0.7]).unwrap());
    for lie in [LieStructure::su2(), heis] {
        let n = lie.dim();
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (Poly::var(n, i), Poly::var(n, j));
                let c = &lie_star(&x, &y, &lie, 1).unwrap() - &lie_star(&y, &x, &lie, 1).unwrap();
                for k in 0..n {
                    let mut e = vec![0u32; n];
                    e[k] = 1;
                    lie_gap = lie_gap.max((c.coefficient(&e) - Complex64::new(0.0, lie.get(i, j, k))).norm());
                }
                lie_gap = lie_gap.max(c.coefficient(&vec![0; n]).norm());
            }
        }
    }
    let q = Complex64::new(1.3, -0.4);
    let mut qp: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for ordering in [QOrdering::Normal, QOrdering::Symmetric] {
        for _ in 0..30 {
            let mono = |rng: &mut ChaCha8Rng| {
                Poly::monomial(2, vec![rng.gen_range(0..4), rng.gen_range(0..4)], Complex64::new(1.0, 0.0))
            };
            let (f, g, h) = (mono(&mut rng), mono(&mut rng), mono(&mut rng));
            let l = qplane_star(&qplane_star(&f, &g, q, ordering).unwrap(), &h, q, ordering).unwrap();
            let r = qplane_star(&f, &qplane_star(&g, &h, q, ordering).unwrap(), q, ordering).unwrap();
            qp = qp.max(rel_gap(&l, &r));
        }
    }
    vec![
        at_most("Moyal associativity (50 triples)", assoc, 1e-12),
        at_most("[u^i, u^j] − iθ^ij", coord, 1e-15),
        at_most("Lie order-1 commutator − i f u", lie_gap, 1e-12),
        at_most("quantum-plane associativity (30 triples)", qp, 1e-12),
    ]
}

/// `(M_AB)^C_D = η_AD δ^C_B − η_BD δ^C_A`, built here from the definition.
fn m_ab(eta: &[f64; 5], a: usize, b: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(5, 5);
    for d in 0..5 {
        if d == a {
            m[(b, d)] += eta[a];
        }
        if d == b {
            m[(a, d)] -= eta[b];
        }
    }
    m
}

// 11
fn de_sitter() -> Outcome {
    let mut worst: f64 = 0.0;
    for (eta, l) in [(DEFAULT_ETA, 1.3), (LORENTZIAN_ETA, 0.7)] {
        let alg = DeSitterAlgebra::new(eta, l).unwrap();
        let comm = |x: &DMatrix<f64>, y: &DMatrix<f64>| x * y - y * x;
        // the library basis is M_ab (a < b < 4) followed by l⁻¹ M_4a
        let mut k = 0;
        for a in 0..4 {
            for b in a + 1..4 {
                worst = worst.max((&alg.generators[k] - m_ab(&eta, a, b)).amax());
                k += 1;
            }
        }
        for a in 0..4 {
            worst = worst.max((&alg.generators[6 + a] - m_ab(&eta, 4, a) / l).amax());
        }
        // so(5) commutators for every index quadruple
        let dl = |a: usize, b: usize| if a == b { eta[a] } else { 0.0 };
        for a in 0..5 {
            for b in 0..5 {
                for c in 0..5 {
                    for d in 0..5 {
                        let lhs = comm(&m_ab(&eta, a, b), &m_ab(&eta, c, d));
                        let rhs = m_ab(&eta, b, d) * dl(a, c) - m_ab(&eta, a, d) * dl(b, c) - m_ab(&eta, b, c) * dl(a, d)
                            + m_ab(&eta, a, c) * dl(b, d);
                        worst = worst.max((lhs - rhs).amax());
                    }
                }
            }
        }
        // the structure constants reproduce the matrix commutators, and Jacobi holds
        let s = alg.dim();
        for a in 0..s {
            for b in 0..s {
                let mut rhs = DMatrix::zeros(5, 5);
                for c in 0..s {
                    rhs += &alg.generators[c] * alg.structure.get(a, b, c);
                }
                worst = worst.max((comm(&alg.generators[a], &alg.generators[b]) - rhs).amax());
                for c in 0..s {
                    let j = comm(&comm(&alg.generators[a], &alg.generators[b]), &alg.generators[c])
                        + comm(&comm(&alg.generators[b], &alg.generators[c]), &alg.generators[a])
                        + comm(&comm(&alg.generators[c], &alg.generators[a]), &alg.generators[b]);
                    worst = worst.max(j.amax());
                }
            }
        }
    }
    vec![at_most("commutators, split relations and Jacobi", worst, 1e-12)]
}

/// Affine level-one data `q_{μ,a} = c + L·u`, `γ_a = g + G·u` on a 2+2 chart
/// for the de Sitter algebra, plus the level-two fields from their formulas.
struct AffineGauge {
    level: GaugeLevel1,
    q0: Vec<Vec<f64>>,
    ql: Vec<Vec<Vec<f64>>>,
    g0: Vec<f64>,
    gl: Vec<Vec<f64>>,
}

impl AffineGauge {
    fn new(rng: &mut ChaCha8Rng, shape: BundleShape, s: usize) -> Self {
        let d = shape.dim();
        let vars: Vec<String> = (1..=shape.n).map(|i| format!("x{i}")).chain((1..=shape.m).map(|a| format!("y{a}"))).collect();
        let mut c = || rng.gen_range(-0.3..0.3);
        let q0: Vec<Vec<f64>> = (0..d).map(|_| (0..s).map(|_| c()).collect()).collect();
        let ql: Vec<Vec<Vec<f64>>> = (0..d).map(|_| (0..s).map(|_| (0..d).map(|_| c()).collect()).collect()).collect();
        let g0: Vec<f64> = (0..s).map(|_| c()).collect();
        let gl: Vec<Vec<f64>> = (0..s).map(|_| (0..d).map(|_| c()).collect()).collect();
        let expr = |k: f64, lin: &[f64]| {
            let mut e = format!("{k:?}");
            for (coef, v) in lin.iter().zip(&vars) {
                e += &format!(" + ({coef:?})*{v}");
            }
            parse_field(&e, shape).unwrap()
        };
        let q1 = (0..d).map(|mu| (0..s).map(|a| expr(q0[mu][a], &ql[mu][a])).collect()).collect();
        let gamma1 = (0..s).map(|a| expr(g0[a], &gl[a])).collect();
        AffineGauge {
            level: GaugeLevel1::new(shape, q1, gamma1).unwrap(),
            q0,
            ql,
            g0,
            gl,
        }
    }

    fn q(&self, mu: usize, a: usize, u: &[f64]) -> f64 {
        self.q0[mu][a] + self.ql[mu][a].iter().zip(u).map(|(l, x)| l * x).sum::<f64>()
    }

    /// `γ²_{ab} = ½ θ^{νμ} ∂_ν γ_a q_{μ,b}` and
    /// `q²_{μ,ab} = −½ θ^{ντ} q_{ν,a} (∂_τ q_{μ,b} + R_{τμ,b})` with
    /// `R_{τμ,b} = ∂_τ q_{μ,b} − ∂_μ q_{τ,b} + f^{ec}_b q_{τ,e} q_{μ,c}`.
    fn level2(&self, theta: &ThetaMatrix, lie: &LieStructure, u: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<Vec<f64>>>) {
        let d = u.len();
        let s = self.g0.len();
        let field = |t: usize, mu: usize, b: usize| {
            let mut v = self.ql[mu][b][t] - self.ql[t][b][mu];
            for e in 0..s {
                for c in 0..s {
                    v += lie.get(e, c, b) * self.q(t, e, u) * self.q(mu, c, u);
                }
            }
            v
        };
        let gamma2 = (0..s)
            .map(|a| {
                (0..s)
                    .map(|b| {
                        let mut v = 0.0;
                        for nu in 0..d {
                            for mu in 0..d {
                                v += 0.5 * theta.get(nu, mu) * self.gl[a][nu] * self.q(mu, b, u);
                            }
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        let q2 = (0..d)
            .map(|mu| {
                (0..s)
                    .map(|a| {
                        (0..s)
                            .map(|b| {
                                let mut v = 0.0;
                                for nu in 0..d {
                                    for t in 0..d {
                                        v -= 0.5 * theta.get(nu, t) * self.q(nu, a, u) * (self.ql[mu][b][t] + field(t, mu, b));
                                    }
                                }
                                v
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        (gamma2, q2)
    }
}

// 12
fn seiberg_witten() -> Outcome {
    let alg = DeSitterAlgebra::default_euclidean(1.0).unwrap();
    let lie = &alg.structure;
    let shape = BundleShape::new(2, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let gauge = AffineGauge::new(&mut rng, shape, alg.dim());
    let theta = ThetaMatrix::from_upper(4, &[0.03, -0.02, 0.01, 0.025, -0.015, 0.02]).unwrap();
    let (mut zero, mut lin, mut oracle, mut slope, mut closure): (f64, f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let varsigma: Vec<ScalarField> = (0..alg.dim())
        .map(|_| {
            let e = format!("{:?} + ({:?})*x1*y2", rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
            parse_field(&e, shape).unwrap()
        })
        .collect();
    for u in sample_points(shape, 3, 12) {
        let at = |t: &ThetaMatrix| sw_expand(&gauge.level, t, lie, &u).unwrap();
        zero = zero.max(at(&theta.scaled(0.0)).max_abs());
        let one = at(&theta);
        for k in [2.0, -3.0] {
            let other = at(&theta.scaled(k));
            lin = lin.max(tensor_gap(other.q2.iter(), (&one.q2 * k).iter()));
            lin = lin.max(tensor_gap(other.gamma2.iter(), (&one.gamma2 * k).iter()));
        }
        let (g2, q2) = gauge.level2(&theta, lie, &u);
        for a in 0..alg.dim() {
            for b in 0..alg.dim() {
                oracle = oracle.max((one.gamma2[[a, b]] - g2[a][b]).abs());
                for mu in 0..4 {
                    oracle = oracle.max((one.q2[[mu, a, b]] - q2[mu][a][b]).abs());
                }
            }
        }
        let rep = sw_residual_scaling(&gauge.level, &theta, &alg.generators, &u, &[1.0, 0.5, 0.25]).unwrap();
        slope = slope.max(rep.slopes.iter().fold(0.0, |m: f64, s| m.max((s - 2.0).abs())));
        closure = closure.max(closure_check(&gauge.level, &varsigma, &theta, &alg.generators, &u).unwrap());
    }
    vec![
        at_most("level two at θ = 0", zero, 1e-12),
        at_most("linearity in θ", lin, 1e-12),
        at_most("level two vs closed form", oracle, 1e-12),
        at_most("|log-log slope − 2|", slope, 0.1),
        at_most("closure at order θ", closure, 1e-9),
    ]
}

// 13
fn bridge() -> Outcome {
    let (r, l0) = (1.4, 2.5);
    let alg = DeSitterAlgebra::default_euclidean(3.0).unwrap();
    let sphere = geo(&format!("sphere2xflat:{r}"));
    let mut closed: f64 = 0.0;
    let mut res: f64 = 0.0;
    for u in sample_points(sphere.shape(), 10, 13) {
        let b = curvature_bridge(&sphere, &ConnectionSelector::Canonical, &alg, l0, &u).unwrap();
        res = res.max(b.residual);
        // orthonormal coframe diag(r, r cos x1, 1, 1); Gaussian curvature 1/r² on the sphere block
        let chi = [r, r * u[0].cos(), 1.0, 1.0];
        let e = |x: usize, mu: usize| if x == mu { chi[mu] } else { 0.0 };
        for a in 0..4 {
            for c in 0..4 {
                for t in 0..4 {
                    for m in 0..4 {
                        let k = if a < 2 && c < 2 { 1.0 / (r * r) } else { 0.0 };
                        let expect = (k + 1.0 / (l0 * l0)) * (e(a, t) * e(c, m) - e(a, m) * e(c, t));
                        closed = closed.max((b.rotation_block[[a, c, t, m]] - expect).abs());
                    }
                }
            }
        }
    }
    let aniso = geo("anisotropic");
    for u in sample_points(aniso.shape(), 10, 13) {
        res = res.max(curvature_bridge(&aniso, &ConnectionSelector::Canonical, &alg, l0, &u).unwrap().residual);
    }
    vec![
        at_most("F-block vs χ-contracted d-curvature", res, 1e-8),
        at_most("sphere F-block vs constant curvature", closed, 1e-8),
    ]
}

// 14
fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_dgeom");
    let dir = tempfile::tempdir().unwrap();
    let analyze = dir.path().join("analyze.json");
    std::fs::write(
        &analyze,
        r#"{"geometry": {"builtin": "anisotropic"}, "sample": {"count": 12, "seed": 42},
            "modules": {"frame": true, "einstein": true, "spectral": true}}"#,
    )
    .unwrap();
    let sw = dir.path().join("sw.json");
    std::fs::write(
        &sw,
        r#"{"shape": [2, 2], "algebra": {"desitter": {}}, "potential": {"random": {"seed": 5}},
            "theta": [0.03, -0.02, 0.01, 0.025, -0.015, 0.02], "sample": {"count": 2, "seed": 9}}"#,
    )
    .unwrap();
    let run = |args: &[&str]| {
        let out = Command::new(bin).args(args).output().unwrap();
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let mut differing = 0.0;
    for (cmd, cfg) in [("analyze", &analyze), ("sw", &sw)] {
        let cfg = cfg.to_str().unwrap();
        let a = run(&["--threads", "1", cmd, "--config", cfg]);
        let b = run(&["--threads", "4", cmd, "--config", cfg]);
        let c = run(&[cmd, "--config", cfg]);
        if a != b || a != c || a.is_empty() {
            differing += 1.0;
        }
    }
    let start = Instant::now();
    let status = Command::new(bin).args(["verify", "--suite", "all"]).output().unwrap().status;
    let secs = start.elapsed().as_secs_f64();
    vec![
        at_most("reports differing across runs", differing, 0.0),
        ("verify --suite all exit status", status.code().unwrap_or(-1) as f64, status.success()),
        at_most("verify --suite all runtime [s]", secs, 120.0),
    ]
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("metricity", metricity),
        ("reduction to Christoffel symbols", reduction),
        ("pure-gauge coincidence", coincidence),
        ("anholonomy", anholonomy),
        ("curvature sanity", curvature_sanity),
        ("Ricci asymmetry", ricci_asymmetry),
        ("Finsler", finsler_checks),
        ("Clifford and spin", clifford_spin),
        ("spectral coefficients", spectral_checks),
        ("star products", star_products),
        ("de Sitter algebra", de_sitter),
        ("Seiberg-Witten", seiberg_witten),
        ("gauge/geometry bridge", bridge),
        ("CLI determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(parts) => {
                let pass = parts.iter().all(|p| p.2);
                if !pass {
                    failed += 1;
                }
                let detail: Vec<String> = parts
                    .iter()
                    .map(|(n, v, ok)| format!("{n} = {v:.3e}{}", if *ok { "" } else { " [FAIL]" }))
                    .collect();
                println!(
                    "{} criterion {:>2} {name} ({secs:.1} s): {}",
                    if pass { "PASS" } else { "FAIL" },
                    i + 1,
                    detail.join("; ")
                );
            }
            Err(_) => {
                failed += 1;
                println!("FAIL criterion {:>2} {name}: panicked", i + 1);
            }
        }
    }
    println!("acceptance: {}/14 criteria passed", 14 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
