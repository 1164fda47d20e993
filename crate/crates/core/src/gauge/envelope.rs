//! Enveloping-algebra checks of the Seiberg–Witten expansion.
//!
//! Fields are represented as matrix-valued polynomials: a level-one
//! configuration is expanded to Taylor polynomials around the evaluation
//! point (in shifted coordinates, so the point itself is the origin) and
//! multiplied by the Hermitian generators `I^a = i T_a` of a faithful
//! representation. Products of generators then realize the enveloping
//! algebra, and the Moyal product acts entrywise on the polynomials.
//!
//! Each quantity carries two formal gradings: powers of a bookkeeping
//! parameter `t` multiplying θ (kept to first order when checking
//! identities "at order θ") and a nilpotent `ε` carrying a gauge variation,
//! so that `δF[q]` is read off as the `ε` coefficient of `F[q + ε δq]`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dsl::ScalarField;
use crate::error::{Error, Result};
use crate::jet::{JetLayout, MAX_ORDER};
use crate::ncalg::{Poly, ThetaMatrix};

use super::sw::{GaugeLevel1, GaugeLevel2};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Default order of the Taylor polynomials built from DSL fields.
pub const DEFAULT_TAYLOR_ORDER: usize = 4;

/// Taylor polynomial of `f` at `u` in the shifted coordinates `w = x − u`.
pub fn taylor_poly(f: &ScalarField, u: &[f64], order: usize) -> Result<Poly> {
    let jet = f.eval_jet(u, order)?;
    let layout = jet.layout();
    let mut p = Poly::zero(u.len());
    for (i, c) in jet.taylor().iter().enumerate() {
        let exps = layout.multi_index(i).iter().map(|&k| k as u32).collect();
        p.add_term(exps, Complex64::new(*c, 0.0));
    }
    Ok(p)
}

/// Dense Taylor coefficients of `f` at `u` in the jet layout, truncated at
/// `order`.
fn taylor_dense(f: &ScalarField, u: &[f64], order: usize) -> Result<Vec<Complex64>> {
    let jet = f.eval_jet(u, order)?;
    let len = JetLayout::get(u.len()).len(order);
    Ok(jet.taylor()[..len].iter().map(|c| Complex64::new(*c, 0.0)).collect())
}

/// Square matrix of polynomials truncated at a fixed total degree. Each entry
/// is a dense coefficient vector in the jet layout, so products and
/// derivatives run over precomputed index tables and the truncation is
/// implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct MatPoly {
    size: usize,
    nvars: usize,
    degree: usize,
    /// Coefficients of entry `(r, c)` at `[(r * size + c) * len ..][..len]`.
    data: Vec<Complex64>,
}

impl MatPoly {
    pub fn zero(size: usize, nvars: usize, degree: usize) -> Self {
        let len = JetLayout::get(nvars).len(degree);
        MatPoly {
            size,
            nvars,
            degree,
            data: vec![ZERO; size * size * len],
        }
    }

    fn layout(&self) -> &'static JetLayout {
        JetLayout::get(self.nvars)
    }

    fn len(&self) -> usize {
        self.layout().len(self.degree)
    }

    /// `Σ_a c_a B_a` for dense scalar coefficients `c_a` and constant matrices `B_a`.
    fn combine(coeffs: &[Vec<Complex64>], basis: &[DMatrix<Complex64>], nvars: usize, degree: usize) -> Self {
        let size = basis.first().map_or(0, |b| b.nrows());
        let mut out = MatPoly::zero(size, nvars, degree);
        let len = out.len();
        for (c, b) in coeffs.iter().zip(basis) {
            for r in 0..size {
                for k in 0..size {
                    let z = b[(r, k)];
                    if z != ZERO {
                        let e = &mut out.data[(r * size + k) * len..][..len];
                        for (x, y) in e.iter_mut().zip(c) {
                            *x += z * y;
                        }
                    }
                }
            }
        }
        out
    }

    pub fn get(&self, r: usize, c: usize) -> &[Complex64] {
        let len = self.len();
        &self.data[(r * self.size + c) * len..][..len]
    }

    fn with_data(&self, data: Vec<Complex64>) -> Self {
        MatPoly {
            size: self.size,
            nvars: self.nvars,
            degree: self.degree,
            data,
        }
    }

    fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        self.with_data(self.data.iter().map(|x| f(*x)).collect())
    }

    fn zip(&self, other: &MatPoly, f: impl Fn(Complex64, Complex64) -> Complex64) -> Self {
        self.with_data(self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect())
    }

    pub fn add(&self, other: &MatPoly) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &MatPoly) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|x| x * c)
    }

    /// `∂/∂w_var`; the top-degree coefficients become zero.
    pub fn partial(&self, var: usize) -> Self {
        let layout = self.layout();
        let len = self.len();
        let shift = layout.shift_table(var);
        let mut out = MatPoly::zero(self.size, self.nvars, self.degree);
        for (src, dst) in self.data.chunks_exact(len).zip(out.data.chunks_exact_mut(len)) {
            for (i, d) in dst.iter_mut().enumerate() {
                let k = shift[i] as usize;
                if k < len {
                    *d = src[k] * (layout.multi_index(k)[var] as f64);
                }
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| *x == ZERO)
    }

    /// Value at the origin of the shifted coordinates.
    pub fn at_origin(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.size, self.size, |r, c| self.get(r, c)[0])
    }

    /// Matrix product with truncated polynomial entries.
    fn matmul(&self, other: &MatPoly) -> MatPoly {
        let n = self.size;
        let len = self.len();
        let triples = self.layout().triples_to(self.degree);
        let nonzero = |m: &MatPoly| -> Vec<bool> { m.data.chunks_exact(len).map(|e| e.iter().any(|x| *x != ZERO)).collect() };
        let (na, nb) = (nonzero(self), nonzero(other));
        let mut out = MatPoly::zero(n, self.nvars, self.degree);
        for r in 0..n {
            for k in 0..n {
                if !na[r * n + k] {
                    continue;
                }
                let a = self.get(r, k);
                for c in 0..n {
                    if !nb[k * n + c] {
                        continue;
                    }
                    let b = other.get(k, c);
                    let e = &mut out.data[(r * n + c) * len..][..len];
                    for &(i, j, t) in triples {
                        e[t as usize] += a[i as usize] * b[j as usize];
                    }
                }
            }
        }
        out
    }

    /// `Σ_j θ^{ij} ∂_j` applied to every entry.
    fn theta_partial(&self, theta: &ThetaMatrix, i: usize) -> MatPoly {
        let mut acc = MatPoly::zero(self.size, self.nvars, self.degree);
        for j in 0..self.nvars {
            let t = theta.get(i, j);
            if t != 0.0 {
                acc = acc.add(&self.partial(j).scale(Complex64::new(t, 0.0)));
            }
        }
        acc
    }

    /// Moyal pieces of the matrix star product: entry `k` is the order-`θ^k`
    /// term, `(i/2)^k / k! Σ θ^{i1 j1} ⋯ θ^{ik jk} ∂_{i1…ik} A ∂_{j1…jk} B`,
    /// up to `max_order` (or until the degree runs out).
    fn moyal_pieces(&self, other: &MatPoly, theta: &ThetaMatrix, max_order: usize) -> Vec<MatPoly> {
        let top = max_order.min(self.degree);
        let mut out = vec![MatPoly::zero(self.size, self.nvars, self.degree); top + 1];
        // multisets i1 ≤ … ≤ ik, weighted by 1 / Π (multiplicity)!, since the
        // sequences of one multiset all give the same product
        fn walk(
            a: &MatPoly,
            b: &MatPoly,
            theta: &ThetaMatrix,
            start: usize,
            k: usize,
            weight: f64,
            run: (usize, u32),
            top: usize,
            out: &mut [MatPoly],
        ) {
            if a.is_zero() || b.is_zero() {
                return;
            }
            let w = I.scale(0.5).powu(k as u32) * weight;
            out[k] = out[k].add(&a.matmul(b).scale(w));
            if k == top {
                return;
            }
            for i in start..a.nvars {
                let m = if i == run.0 { run.1 + 1 } else { 1 };
                walk(
                    &a.partial(i),
                    &b.theta_partial(theta, i),
                    theta,
                    i,
                    k + 1,
                    weight / m as f64,
                    (i, m),
                    top,
                    out,
                );
            }
        }
        walk(self, other, theta, 0, 0, 1.0, (usize::MAX, 0), top, &mut out);
        out
    }
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// How products are formed and how θ is tracked.
#[derive(Debug, Clone)]
pub enum StarMode {
    /// θ enters numerically and the Moyal product is summed to all orders.
    Exact(ThetaMatrix),
    /// θ is scaled by a formal `t` and everything is truncated after `t¹`.
    FirstOrder(ThetaMatrix),
}

impl StarMode {
    fn theta(&self) -> &ThetaMatrix {
        match self {
            StarMode::Exact(t) | StarMode::FirstOrder(t) => t,
        }
    }

    fn t_max(&self) -> usize {
        match self {
            StarMode::Exact(_) => 0,
            StarMode::FirstOrder(_) => 1,
        }
    }
}

/// A matrix polynomial graded by `t^k ε^e` with `k ≤ t_max`, `e ≤ 1`.
#[derive(Debug, Clone)]
struct Ser {
    slots: Vec<Option<MatPoly>>,
}

struct Ctx {
    mode: StarMode,
    size: usize,
    nvars: usize,
}

impl Ctx {
    fn slot(&self, t: usize, e: usize) -> usize {
        t * 2 + e
    }

    fn zero(&self) -> Ser {
        Ser {
            slots: vec![None; (self.mode.t_max() + 1) * 2],
        }
    }

    fn base(&self, m: MatPoly, variation: Option<MatPoly>) -> Ser {
        let mut s = self.zero();
        s.slots[0] = Some(m);
        s.slots[1] = variation;
        s
    }

    fn lin(&self, a: &Ser, b: &Ser, sb: Complex64) -> Ser {
        let slots = a
            .slots
            .iter()
            .zip(&b.slots)
            .map(|(x, y)| match (x, y) {
                (Some(x), Some(y)) => Some(x.add(&y.scale(sb))),
                (Some(x), None) => Some(x.clone()),
                (None, Some(y)) => Some(y.scale(sb)),
                (None, None) => None,
            })
            .collect();
        Ser { slots }
    }

    fn add(&self, a: &Ser, b: &Ser) -> Ser {
        self.lin(a, b, Complex64::new(1.0, 0.0))
    }

    fn sub(&self, a: &Ser, b: &Ser) -> Ser {
        self.lin(a, b, Complex64::new(-1.0, 0.0))
    }

    fn scale(&self, a: &Ser, c: Complex64) -> Ser {
        Ser {
            slots: a.slots.iter().map(|x| x.as_ref().map(|m| m.scale(c))).collect(),
        }
    }

    fn partial(&self, a: &Ser, var: usize) -> Ser {
        Ser {
            slots: a.slots.iter().map(|x| x.as_ref().map(|m| m.partial(var))).collect(),
        }
    }

    /// Multiplies by the bookkeeping `t` (identity in exact mode).
    fn shift_t(&self, a: &Ser) -> Ser {
        if self.mode.t_max() == 0 {
            return a.clone();
        }
        let mut out = self.zero();
        for t in 0..self.mode.t_max() {
            for e in 0..2 {
                out.slots[self.slot(t + 1, e)] = a.slots[self.slot(t, e)].clone();
            }
        }
        out
    }

    fn product(&self, a: &Ser, b: &Ser, star: bool) -> Ser {
        let t_max = self.mode.t_max();
        let theta = self.mode.theta();
        let mut out = self.zero();
        for t1 in 0..=t_max {
            for e1 in 0..2 {
                let Some(x) = &a.slots[self.slot(t1, e1)] else { continue };
                for t2 in 0..=t_max - t1 {
                    for e2 in 0..2 - e1 {
                        let Some(y) = &b.slots[self.slot(t2, e2)] else { continue };
                        let pieces = if !star {
                            vec![x.matmul(y)]
                        } else {
                            match &self.mode {
                                StarMode::Exact(_) => {
                                    let all = x.moyal_pieces(y, theta, usize::MAX);
                                    let first = all[0].clone();
                                    vec![all[1..].iter().fold(first, |acc, p| acc.add(p))]
                                }
                                StarMode::FirstOrder(_) => x.moyal_pieces(y, theta, t_max - t1 - t2),
                            }
                        };
                        for (k, piece) in pieces.into_iter().enumerate() {
                            let t = t1 + t2 + k;
                            if t > t_max {
                                continue;
                            }
                            let s = &mut out.slots[self.slot(t, e1 + e2)];
                            *s = Some(match s.take() {
                                Some(m) => m.add(&piece),
                                None => piece,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    fn mul(&self, a: &Ser, b: &Ser) -> Ser {
        self.product(a, b, false)
    }

    fn star(&self, a: &Ser, b: &Ser) -> Ser {
        self.product(a, b, true)
    }

    fn comm(&self, a: &Ser, b: &Ser) -> Ser {
        self.sub(&self.mul(a, b), &self.mul(b, a))
    }

    fn anti(&self, a: &Ser, b: &Ser) -> Ser {
        self.add(&self.mul(a, b), &self.mul(b, a))
    }

    fn star_comm(&self, a: &Ser, b: &Ser) -> Ser {
        self.sub(&self.star(a, b), &self.star(b, a))
    }

    /// `t Σ_{μν} θ^{μν} f(μ, ν)`.
    fn theta_sum(&self, f: impl Fn(usize, usize) -> Ser) -> Ser {
        let theta = self.mode.theta().clone();
        let mut acc = self.zero();
        for mu in 0..self.nvars {
            for nu in 0..self.nvars {
                let th = theta.get(mu, nu);
                if th != 0.0 {
                    acc = self.add(&acc, &self.scale(&f(mu, nu), Complex64::new(th, 0.0)));
                }
            }
        }
        self.shift_t(&acc)
    }

    /// Keeps only the undeformed (`ε⁰`) part.
    fn eps0(&self, a: &Ser) -> Ser {
        let mut out = a.clone();
        for t in 0..=self.mode.t_max() {
            out.slots[self.slot(t, 1)] = None;
        }
        out
    }

    /// Moves the `ε¹` part down to `ε⁰`.
    fn eps1(&self, a: &Ser) -> Ser {
        let mut out = self.zero();
        for t in 0..=self.mode.t_max() {
            out.slots[self.slot(t, 0)] = a.slots[self.slot(t, 1)].clone();
        }
        out
    }

    /// Largest entry at the origin over all slots.
    fn max_at_origin(&self, a: &Ser) -> f64 {
        a.slots
            .iter()
            .flatten()
            .map(|m| m.at_origin().iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }

    /// `R¹_{τρ} = ∂_τ q_ρ − ∂_ρ q_τ − i[q_τ, q_ρ]`.
    fn field_strength(&self, q: &[Ser], tau: usize, rho: usize) -> Ser {
        let lin = self.sub(&self.partial(&q[rho], tau), &self.partial(&q[tau], rho));
        self.sub(&lin, &self.scale(&self.comm(&q[tau], &q[rho]), I))
    }

    /// All `R¹_{τρ}`, indexed `[τ][ρ]`.
    fn field_strengths(&self, q: &[Ser]) -> Vec<Vec<Ser>> {
        (0..self.nvars)
            .map(|t| (0..self.nvars).map(|r| self.field_strength(q, t, r)).collect())
            .collect()
    }

    /// `A_ρ = q_ρ − ¼ θ^{ντ} {q_ν, ∂_τ q_ρ + R¹_{τρ}}`.
    fn sw_potential(&self, q: &[Ser]) -> Vec<Ser> {
        let r = self.field_strengths(q);
        (0..self.nvars)
            .map(|rho| {
                let w = self.theta_sum(|nu, tau| {
                    let inner = self.add(&self.partial(&q[rho], tau), &r[tau][rho]);
                    self.anti(&q[nu], &inner)
                });
                self.add(&q[rho], &self.scale(&w, Complex64::new(-0.25, 0.0)))
            })
            .collect()
    }

    /// `Λ = γ + ¼ θ^{νμ} {∂_ν γ, q_μ}`.
    fn sw_parameter(&self, gamma: &Ser, q: &[Ser]) -> Ser {
        let corr = self.theta_sum(|nu, mu| self.anti(&self.partial(gamma, nu), &q[mu]));
        self.add(gamma, &self.scale(&corr, Complex64::new(0.25, 0.0)))
    }

    /// `∂_ρ Λ + i[Λ ⋆, A_ρ]`.
    fn nc_variation(&self, lambda: &Ser, a: &Ser, rho: usize) -> Ser {
        self.add(&self.partial(lambda, rho), &self.scale(&self.star_comm(lambda, a), I))
    }

    /// `R̂_{τλ} = R¹ + ¼ θ^{μν} (2{R¹_{τμ}, R¹_{λν}} − {q_μ, D_ν R¹_{τλ} + ∂_ν R¹_{τλ}})`
    /// with `D_ν X = ∂_ν X − i[q_ν, X]`.
    fn corrected_strength(&self, q: &[Ser], fs: &[Vec<Ser>], tau: usize, lam: usize) -> Ser {
        let r = &fs[tau][lam];
        let corr = self.theta_sum(|mu, nu| {
            let quad = self.scale(&self.anti(&fs[tau][mu], &fs[lam][nu]), Complex64::new(2.0, 0.0));
            let dr = self.partial(r, nu);
            let cov = self.sub(&dr, &self.scale(&self.comm(&q[nu], r), I));
            self.sub(&quad, &self.anti(&q[mu], &self.add(&cov, &dr)))
        });
        self.add(r, &self.scale(&corr, Complex64::new(0.25, 0.0)))
    }
}

/// Hermitian generators `I^a = i T_a` of a real matrix basis.
pub fn hermitian_basis(real: &[DMatrix<f64>]) -> Vec<DMatrix<Complex64>> {
    real.iter().map(|t| t.map(|x| Complex64::new(0.0, x))).collect()
}

/// Polynomial data of a level-one configuration around a point.
struct PolyLevel {
    q: Vec<MatPoly>,
    gamma: MatPoly,
}

fn poly_level(level: &GaugeLevel1, basis: &[DMatrix<Complex64>], u: &[f64], order: usize) -> Result<PolyLevel> {
    if basis.len() != level.algebra_dim() {
        return Err(Error::Shape(format!(
            "representation with {} generators for a potential with {} components",
            basis.len(),
            level.algebra_dim()
        )));
    }
    let d = level.shape.dim();
    let lift = |fields: &[ScalarField]| -> Result<MatPoly> {
        let coeffs = fields.iter().map(|f| taylor_dense(f, u, order)).collect::<Result<Vec<_>>>()?;
        Ok(MatPoly::combine(&coeffs, basis, d, order))
    };
    let q = level.q1.iter().map(|row| lift(row)).collect::<Result<_>>()?;
    let gamma = lift(&level.gamma1)?;
    Ok(PolyLevel { q, gamma })
}

fn context(level: &GaugeLevel1, basis: &[DMatrix<Complex64>], mode: StarMode, order: usize) -> Result<Ctx> {
    let d = level.shape.dim();
    if mode.theta().dim() != d {
        return Err(Error::Shape(format!("θ of dimension {} on a chart of dimension {d}", mode.theta().dim())));
    }
    if order > MAX_ORDER {
        return Err(Error::OrderOverflow {
            requested: order,
            max: MAX_ORDER,
        });
    }
    Ok(Ctx {
        mode,
        size: basis.first().map_or(0, |b| b.nrows()),
        nvars: d,
    })
}

impl Ctx {
    /// The classical variation `δq_ρ = ∂_ρ γ + i[γ, q_ρ]` as a plain matrix polynomial.
    fn classical_variation(&self, gamma: &MatPoly, q: &MatPoly, rho: usize) -> MatPoly {
        let c = gamma.matmul(q).sub(&q.matmul(gamma));
        gamma.partial(rho).add(&c.scale(I))
    }

    /// Potential components carrying the variation generated by `gamma`.
    fn varied_potential(&self, data: &PolyLevel, gamma: &MatPoly) -> Vec<Ser> {
        data.q
            .iter()
            .enumerate()
            .map(|(rho, q)| self.base(q.clone(), Some(self.classical_variation(gamma, q, rho))))
            .collect()
    }
}

/// Residual of the gauge-equivalence condition
/// `δ_γ(q + W) = ∂Λ + i[Λ ⋆, q + W]` with the exact Moyal product, where
/// `W` and `Λ − γ` are the first-order Seiberg–Witten terms. It vanishes at
/// order θ, so it scales like `|θ|²`.
pub fn sw_residual(
    level: &GaugeLevel1,
    theta: &ThetaMatrix,
    real_basis: &[DMatrix<f64>],
    u: &[f64],
    taylor_order: usize,
) -> Result<f64> {
    let basis = hermitian_basis(real_basis);
    let ctx = context(level, &basis, StarMode::Exact(theta.clone()), taylor_order)?;
    let data = poly_level(level, &basis, u, taylor_order)?;
    let q = ctx.varied_potential(&data, &data.gamma);
    let a = ctx.sw_potential(&q);
    let gamma = ctx.base(data.gamma.clone(), None);
    let lambda = ctx.sw_parameter(&gamma, &ctx.eps0_all(&q));
    let mut worst: f64 = 0.0;
    for (rho, a_rho) in a.iter().enumerate() {
        let lhs = ctx.eps1(a_rho);
        let rhs = ctx.eps0(&ctx.nc_variation(&lambda, &ctx.eps0(a_rho), rho));
        worst = worst.max(ctx.max_at_origin(&ctx.sub(&lhs, &rhs)));
    }
    Ok(worst)
}

impl Ctx {
    fn eps0_all(&self, q: &[Ser]) -> Vec<Ser> {
        q.iter().map(|s| self.eps0(s)).collect()
    }
}

/// Residuals of [`sw_residual`] along `θ · s` for each scale `s`, with the
/// log–log slopes between consecutive scales.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub scales: Vec<f64>,
    pub residuals: Vec<f64>,
    pub slopes: Vec<f64>,
}

pub fn sw_residual_scaling(
    level: &GaugeLevel1,
    theta: &ThetaMatrix,
    real_basis: &[DMatrix<f64>],
    u: &[f64],
    scales: &[f64],
) -> Result<ScalingReport> {
    let residuals = scales
        .iter()
        .map(|s| sw_residual(level, &theta.scaled(*s), real_basis, u, DEFAULT_TAYLOR_ORDER))
        .collect::<Result<Vec<_>>>()?;
    let slopes = scales
        .windows(2)
        .zip(residuals.windows(2))
        .map(|(s, r)| (r[0] / r[1]).ln() / (s[0] / s[1]).ln())
        .collect();
    Ok(ScalingReport {
        scales: scales.to_vec(),
        residuals,
        slopes,
    })
}

/// First-order-in-θ residual of
/// `[δ_γ, δ_ς] A = δ_{i[ς, γ]} A` on the Seiberg–Witten potential
/// `A = q + W[q]`, each transformation acting through its enveloping
/// parameter `Λ` and the Moyal product. `[δ_γ, δ_ς] A` is computed by
/// varying the field-dependent `δ_ς A` along `δ_γ q` and vice versa.
pub fn closure_check(
    level: &GaugeLevel1,
    varsigma: &[ScalarField],
    theta: &ThetaMatrix,
    real_basis: &[DMatrix<f64>],
    u: &[f64],
) -> Result<f64> {
    let order = DEFAULT_TAYLOR_ORDER;
    let basis = hermitian_basis(real_basis);
    let ctx = context(level, &basis, StarMode::FirstOrder(theta.clone()), order)?;
    let data = poly_level(level, &basis, u, order)?;
    let other = poly_level(&level.with_parameter(varsigma.to_vec())?, &basis, u, order)?;
    let (gamma, sigma) = (&data.gamma, &other.gamma);

    // δ_x (δ_y A_ρ): vary q along δ_x, then take the ε part of δ_y A_ρ.
    let second = |x: &MatPoly, y: &MatPoly| -> Vec<Ser> {
        let q = ctx.varied_potential(&data, x);
        let a = ctx.sw_potential(&q);
        let lambda = ctx.sw_parameter(&ctx.base(y.clone(), None), &q);
        a.iter()
            .enumerate()
            .map(|(rho, a_rho)| ctx.eps1(&ctx.nc_variation(&lambda, a_rho, rho)))
            .collect()
    };
    let gs = second(gamma, sigma);
    let sg = second(sigma, gamma);

    let composite = sigma.matmul(gamma).sub(&gamma.matmul(sigma)).scale(I);
    let q = ctx.eps0_all(&ctx.varied_potential(&data, gamma));
    let a = ctx.sw_potential(&q);
    let lambda_c = ctx.sw_parameter(&ctx.base(composite, None), &q);

    let mut worst: f64 = 0.0;
    for rho in 0..ctx.nvars {
        let target = ctx.nc_variation(&lambda_c, &a[rho], rho);
        let resid = ctx.sub(&ctx.sub(&gs[rho], &sg[rho]), &target);
        worst = worst.max(ctx.max_at_origin(&resid));
    }
    Ok(worst)
}

/// First-order-in-θ residual of `δ_γ R̂ = i[Λ ⋆, R̂]` for the θ-corrected
/// field strength.
pub fn covariance_check(
    level: &GaugeLevel1,
    theta: &ThetaMatrix,
    real_basis: &[DMatrix<f64>],
    u: &[f64],
) -> Result<f64> {
    let order = DEFAULT_TAYLOR_ORDER;
    let basis = hermitian_basis(real_basis);
    let ctx = context(level, &basis, StarMode::FirstOrder(theta.clone()), order)?;
    let data = poly_level(level, &basis, u, order)?;
    let q = ctx.varied_potential(&data, &data.gamma);
    let lambda = ctx.sw_parameter(&ctx.base(data.gamma.clone(), None), &ctx.eps0_all(&q));
    let mut worst: f64 = 0.0;
    let fs = ctx.field_strengths(&q);
    for tau in 0..ctx.nvars {
        for lam in tau + 1..ctx.nvars {
            let r = ctx.corrected_strength(&q, &fs, tau, lam);
            let lhs = ctx.eps1(&r);
            let rhs = ctx.scale(&ctx.star_comm(&lambda, &ctx.eps0(&r)), I);
            worst = worst.max(ctx.max_at_origin(&ctx.sub(&lhs, &rhs)));
        }
    }
    Ok(worst)
}

/// First-order-in-θ residual between the Moyal field strength of the
/// Seiberg–Witten potential, `∂_τ A_λ − ∂_λ A_τ − i[A_τ ⋆, A_λ]`, and the
/// closed-form corrected field strength.
pub fn strength_consistency_check(
    level: &GaugeLevel1,
    theta: &ThetaMatrix,
    real_basis: &[DMatrix<f64>],
    u: &[f64],
) -> Result<f64> {
    let order = DEFAULT_TAYLOR_ORDER;
    let basis = hermitian_basis(real_basis);
    let ctx = context(level, &basis, StarMode::FirstOrder(theta.clone()), order)?;
    let data = poly_level(level, &basis, u, order)?;
    let q: Vec<Ser> = data.q.iter().map(|m| ctx.base(m.clone(), None)).collect();
    let a = ctx.sw_potential(&q);
    let fs = ctx.field_strengths(&q);
    let mut worst: f64 = 0.0;
    for tau in 0..ctx.nvars {
        for lam in tau + 1..ctx.nvars {
            let lin = ctx.sub(&ctx.partial(&a[lam], tau), &ctx.partial(&a[tau], lam));
            let nc = ctx.sub(&lin, &ctx.scale(&ctx.star_comm(&a[tau], &a[lam]), I));
            let closed = ctx.corrected_strength(&q, &fs, tau, lam);
            worst = worst.max(ctx.max_at_origin(&ctx.sub(&nc, &closed)));
        }
    }
    Ok(worst)
}

/// Values at `u` of the θ-corrections `W_ρ` and `Λ − γ` built directly in
/// the representation, for comparison with [`super::sw::sw_expand`].
pub fn representation_corrections(
    level: &GaugeLevel1,
    theta: &ThetaMatrix,
    real_basis: &[DMatrix<f64>],
    u: &[f64],
) -> Result<(Vec<DMatrix<Complex64>>, DMatrix<Complex64>)> {
    let basis = hermitian_basis(real_basis);
    let ctx = context(level, &basis, StarMode::Exact(theta.clone()), 2)?;
    let data = poly_level(level, &basis, u, 2)?;
    let q: Vec<Ser> = data.q.iter().map(|m| ctx.base(m.clone(), None)).collect();
    let a = ctx.sw_potential(&q);
    let w = a
        .iter()
        .zip(&q)
        .map(|(a, q)| ctx.sub(a, q).slots[0].as_ref().map_or_else(|| DMatrix::zeros(ctx.size, ctx.size), MatPoly::at_origin))
        .collect();
    let gamma = ctx.base(data.gamma.clone(), None);
    let lam = ctx.sub(&ctx.sw_parameter(&gamma, &q), &gamma);
    let lam = lam.slots[0].as_ref().map_or_else(|| DMatrix::zeros(ctx.size, ctx.size), MatPoly::at_origin);
    Ok((w, lam))
}

/// Enveloping elements `Σ_{ab} c_{ab} ½{I^a, I^b}` of level-two coefficients.
pub fn enveloping_values(level2: &GaugeLevel2, real_basis: &[DMatrix<f64>]) -> (Vec<DMatrix<Complex64>>, DMatrix<Complex64>) {
    let basis = hermitian_basis(real_basis);
    let size = basis.first().map_or(0, |b| b.nrows());
    let s = basis.len();
    let element = |c: &dyn Fn(usize, usize) -> f64| {
        let mut m = DMatrix::<Complex64>::zeros(size, size);
        for a in 0..s {
            for b in 0..s {
                let v = c(a, b);
                if v != 0.0 {
                    m += (&basis[a] * &basis[b] + &basis[b] * &basis[a]) * Complex64::new(0.5 * v, 0.0);
                }
            }
        }
        m
    };
    let d = level2.q2.dim().0;
    let w = (0..d).map(|mu| element(&|a, b| level2.q2[[mu, a, b]])).collect();
    let g = element(&|a, b| level2.gamma2[[a, b]]);
    (w, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{parse_field, BundleShape};
    use crate::gauge::algebra::DeSitterAlgebra;
    use crate::gauge::sw::sw_expand;
    use crate::spectral::max_norm;

    fn shape() -> BundleShape {
        BundleShape::new(2, 2).unwrap()
    }

    fn coeff(seed: usize) -> f64 {
        ((seed * 7919 + 17) % 201) as f64 / 1000.0 - 0.1
    }

    /// Quadratic polynomial fields with pseudo-random coefficients.
    fn field(seed: usize) -> ScalarField {
        let vars = ["x1", "x2", "y1", "y2"];
        let src = format!(
            "{:?} + {:?}*{} + {:?}*{}*{}",
            coeff(seed),
            coeff(seed + 1),
            vars[seed % 4],
            coeff(seed + 2),
            vars[(seed / 4) % 4],
            vars[(seed + 1) % 4]
        );
        parse_field(&src, shape()).unwrap()
    }

    fn level(s: usize, offset: usize) -> GaugeLevel1 {
        let q = (0..4).map(|mu| (0..s).map(|a| field(offset + 31 * mu + 3 * a)).collect()).collect();
        let g = (0..s).map(|a| field(offset + 500 + 5 * a)).collect();
        GaugeLevel1::new(shape(), q, g).unwrap()
    }

    fn theta() -> ThetaMatrix {
        ThetaMatrix::from_upper(4, &[0.3, -0.2, 0.1, 0.25, -0.15, 0.2]).unwrap()
    }

    #[test]
    fn components_match_representation() {
        let alg = DeSitterAlgebra::default_euclidean(1.2).unwrap();
        let lv = level(alg.dim(), 3);
        let u = [0.1, -0.2, 0.3, 0.05];
        let l2 = sw_expand(&lv, &theta(), &alg.structure, &u).unwrap();
        let (w, g) = enveloping_values(&l2, &alg.generators);
        let (w_rep, g_rep) = representation_corrections(&lv, &theta(), &alg.generators, &u).unwrap();
        assert!(max_norm(&(g - g_rep)) < 1e-10);
        for (a, b) in w.iter().zip(&w_rep) {
            assert!(max_norm(&(a - b)) < 1e-10);
        }
    }

    #[test]
    fn closure_and_covariance_at_first_order() {
        let alg = DeSitterAlgebra::default_euclidean(1.0).unwrap();
        let lv = level(alg.dim(), 11);
        let sigma: Vec<ScalarField> = (0..alg.dim()).map(|a| field(900 + 7 * a)).collect();
        let u = [0.2, 0.1, -0.3, 0.4];
        let c = closure_check(&lv, &sigma, &theta(), &alg.generators, &u).unwrap();
        assert!(c < 1e-9, "closure residual {c}");
        let k = covariance_check(&lv, &theta(), &alg.generators, &u).unwrap();
        assert!(k < 1e-9, "covariance residual {k}");
        let s = strength_consistency_check(&lv, &theta(), &alg.generators, &u).unwrap();
        assert!(s < 1e-9, "strength residual {s}");
    }

    #[test]
    fn sw_residual_is_quadratic() {
        let alg = DeSitterAlgebra::default_euclidean(1.0).unwrap();
        let lv = level(alg.dim(), 5);
        let rep = sw_residual_scaling(&lv, &theta().scaled(0.1), &alg.generators, &[0.1, 0.2, 0.3, 0.4], &[1.0, 0.5, 0.25])
            .unwrap();
        for s in &rep.slopes {
            assert!((s - 2.0).abs() < 0.1, "{rep:?}");
        }
    }
}
