//! Truncated multivariate Taylor jets.
//!
//! A [`Jet`] of order `K` in `d` variables stores the Taylor coefficients
//! `t_β = ∂^β f(u) / β!` for every multi-index `|β| ≤ K`. Multi-indices are
//! enumerated in graded order, so the coefficients of a jet of order `K - 1`
//! are a prefix of the coefficients of the order-`K` jet. Arithmetic between
//! jets of different orders truncates to the smaller order; differentiation
//! lowers the order by one.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest supported derivative order.
pub const MAX_ORDER: usize = 6;
/// Largest supported number of variables.
pub const MAX_VARS: usize = 6;

const NONE: u32 = u32::MAX;

/// Multi-index tables for one variable count, covering all orders up to
/// [`MAX_ORDER`].
pub struct JetLayout {
    nvars: usize,
    exps: Vec<[u8; MAX_VARS]>,
    /// `degree_start[k]` is the index of the first multi-index of degree `k`;
    /// `degree_start[k + 1]` is therefore the coefficient count at order `k`.
    degree_start: Vec<usize>,
    /// `shift[v][i]` is the index of `exps[i] + e_v`, or `NONE` past `MAX_ORDER`.
    shift: Vec<Vec<u32>>,
    /// Product triples `(i, j, k)` with `exps[i] + exps[j] = exps[k]`, sorted by
    /// the degree of `k`.
    triples: Vec<(u32, u32, u32)>,
    triple_end: Vec<usize>,
    factorial: Vec<f64>,
}

impl JetLayout {
    fn build(nvars: usize) -> Self {
        let mut exps: Vec<[u8; MAX_VARS]> = Vec::new();
        let mut degree_start = Vec::with_capacity(MAX_ORDER + 2);
        for deg in 0..=MAX_ORDER {
            degree_start.push(exps.len());
            let mut cur = [0u8; MAX_VARS];
            enumerate_degree(nvars, deg, 0, &mut cur, &mut exps);
        }
        degree_start.push(exps.len());

        let index_of = |e: &[u8; MAX_VARS]| -> Option<usize> {
            let deg: usize = e.iter().map(|&x| x as usize).sum();
            if deg > MAX_ORDER {
                return None;
            }
            exps[degree_start[deg]..degree_start[deg + 1]]
                .iter()
                .position(|x| x == e)
                .map(|p| p + degree_start[deg])
        };

        let mut shift = vec![vec![NONE; exps.len()]; nvars];
        for (v, row) in shift.iter_mut().enumerate() {
            for (i, e) in exps.iter().enumerate() {
                let mut s = *e;
                s[v] += 1;
                if let Some(k) = index_of(&s) {
                    row[i] = k as u32;
                }
            }
        }

        let mut triples = Vec::new();
        for (i, a) in exps.iter().enumerate() {
            for (j, b) in exps.iter().enumerate() {
                let mut s = [0u8; MAX_VARS];
                for v in 0..MAX_VARS {
                    s[v] = a[v] + b[v];
                }
                if let Some(k) = index_of(&s) {
                    triples.push((i as u32, j as u32, k as u32));
                }
            }
        }
        let degree = |k: u32| -> usize { exps[k as usize].iter().map(|&x| x as usize).sum() };
        triples.sort_by_key(|&(i, j, k)| (degree(k), k, i, j));
        let mut triple_end = vec![0; MAX_ORDER + 1];
        for (order, end) in triple_end.iter_mut().enumerate() {
            *end = triples.partition_point(|&(_, _, k)| degree(k) <= order);
        }

        let factorial = exps
            .iter()
            .map(|e| e.iter().map(|&x| factorial(x as usize)).product())
            .collect();

        JetLayout {
            nvars,
            exps,
            degree_start,
            shift,
            triples,
            triple_end,
            factorial,
        }
    }

    /// Shared layout for `nvars` variables.
    pub fn get(nvars: usize) -> &'static JetLayout {
        static LAYOUTS: [OnceLock<JetLayout>; MAX_VARS + 1] = [
            OnceLock::new(),
            OnceLock::new(),
            OnceLock::new(),
            OnceLock::new(),
            OnceLock::new(),
            OnceLock::new(),
            OnceLock::new(),
        ];
        assert!(nvars <= MAX_VARS, "jets support at most {MAX_VARS} variables");
        LAYOUTS[nvars].get_or_init(|| JetLayout::build(nvars))
    }

    /// Number of coefficients of an order-`order` jet.
    pub fn len(&self, order: usize) -> usize {
        self.degree_start[order + 1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Product triples `(i, j, k)` whose result has degree at most `order`.
    pub(crate) fn triples_to(&self, order: usize) -> &[(u32, u32, u32)] {
        &self.triples[..self.triple_end[order]]
    }

    /// Index of the multi-index raised by one in `var` (`u32::MAX` past the
    /// largest order).
    pub(crate) fn shift_table(&self, var: usize) -> &[u32] {
        &self.shift[var]
    }

    /// Multi-index at position `i`.
    pub fn multi_index(&self, i: usize) -> &[u8] {
        &self.exps[i][..self.nvars]
    }

    /// Position of a multi-index, if within [`MAX_ORDER`].
    pub fn index_of(&self, beta: &[u8]) -> Option<usize> {
        let mut i = 0usize;
        for (v, &count) in beta.iter().enumerate() {
            for _ in 0..count {
                let next = *self.shift.get(v)?.get(i)?;
                if next == NONE {
                    return None;
                }
                i = next as usize;
            }
        }
        Some(i)
    }
}

fn enumerate_degree(
    nvars: usize,
    remaining: usize,
    var: usize,
    cur: &mut [u8; MAX_VARS],
    out: &mut Vec<[u8; MAX_VARS]>,
) {
    if nvars == 0 {
        if remaining == 0 {
            out.push(*cur);
        }
        return;
    }
    if var == nvars - 1 {
        cur[var] = remaining as u8;
        out.push(*cur);
        cur[var] = 0;
        return;
    }
    for k in (0..=remaining).rev() {
        cur[var] = k as u8;
        enumerate_degree(nvars, remaining - k, var + 1, cur, out);
    }
    cur[var] = 0;
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Number of coefficients `C(d + K, K)` of a jet of order `K` in `d` variables.
pub fn coefficient_count(nvars: usize, order: usize) -> usize {
    let mut c = 1usize;
    for k in 1..=order {
        c = c * (nvars + k) / k;
    }
    c
}

/// Truncated Taylor expansion of a scalar function at a point.
#[derive(Clone)]
pub struct Jet {
    layout: &'static JetLayout,
    order: usize,
    c: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Jet")
            .field("nvars", &self.layout.nvars)
            .field("order", &self.order)
            .field("coefficients", &self.c)
            .finish()
    }
}

impl PartialEq for Jet {
    fn eq(&self, other: &Self) -> bool {
        self.layout.nvars == other.layout.nvars && self.order == other.order && self.c == other.c
    }
}

impl Jet {
    pub fn constant(nvars: usize, order: usize, value: f64) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let layout = JetLayout::get(nvars);
        let mut c = vec![0.0; layout.len(order)];
        c[0] = value;
        Jet { layout, order, c }
    }

    pub fn zero(nvars: usize, order: usize) -> Self {
        Self::constant(nvars, order, 0.0)
    }

    /// The coordinate function `u^var` expanded at a point where it equals `value`.
    pub fn variable(nvars: usize, order: usize, var: usize, value: f64) -> Self {
        let mut j = Self::constant(nvars, order, value);
        if order >= 1 {
            let k = j.layout.shift[var][0] as usize;
            j.c[k] = 1.0;
        }
        j
    }

    /// Seeds one jet per coordinate at `point`.
    pub fn seed(point: &[f64], order: usize) -> Vec<Jet> {
        (0..point.len())
            .map(|v| Jet::variable(point.len(), order, v, point[v]))
            .collect()
    }

    /// Builds a jet from raw Taylor coefficients (graded order).
    pub fn from_taylor(nvars: usize, order: usize, coefficients: Vec<f64>) -> Self {
        let layout = JetLayout::get(nvars);
        assert_eq!(coefficients.len(), layout.len(order));
        Jet {
            layout,
            order,
            c: coefficients,
        }
    }

    pub fn nvars(&self) -> usize {
        self.layout.nvars
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn layout(&self) -> &'static JetLayout {
        self.layout
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Taylor coefficients `∂^β f / β!` in graded order.
    pub fn taylor(&self) -> &[f64] {
        &self.c
    }

    /// The partial derivative `∂^β f` at the expansion point.
    pub fn derivative(&self, beta: &[u8]) -> f64 {
        let deg: usize = beta.iter().map(|&x| x as usize).sum();
        assert!(deg <= self.order, "derivative order {deg} beyond jet order {}", self.order);
        let i = self.layout.index_of(beta).expect("multi-index within range");
        self.c[i] * self.layout.factorial[i]
    }

    /// First partial derivative `∂f/∂u^var` at the expansion point.
    pub fn gradient(&self, var: usize) -> f64 {
        assert!(self.order >= 1);
        self.c[self.layout.shift[var][0] as usize]
    }

    /// Second partial derivative at the expansion point.
    pub fn hessian(&self, a: usize, b: usize) -> f64 {
        let mut beta = [0u8; MAX_VARS];
        beta[a] += 1;
        beta[b] += 1;
        self.derivative(&beta[..self.nvars()])
    }

    pub fn truncate(&self, order: usize) -> Jet {
        if order >= self.order {
            return self.clone();
        }
        Jet {
            layout: self.layout,
            order,
            c: self.c[..self.layout.len(order)].to_vec(),
        }
    }

    /// The jet of `∂f/∂u^var`, one order lower.
    pub fn partial(&self, var: usize) -> Jet {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let n = self.layout.len(order);
        let shift = &self.layout.shift[var];
        let exps = &self.layout.exps;
        let c = (0..n)
            .map(|i| (exps[i][var] as f64 + 1.0) * self.c[shift[i] as usize])
            .collect();
        Jet {
            layout: self.layout,
            order,
            c,
        }
    }

    pub fn scale(&self, s: f64) -> Jet {
        Jet {
            layout: self.layout,
            order: self.order,
            c: self.c.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add_constant(&self, s: f64) -> Jet {
        let mut r = self.clone();
        r.c[0] += s;
        r
    }

    fn check_compatible(&self, other: &Jet) {
        assert_eq!(
            self.layout.nvars, other.layout.nvars,
            "jets over different variable counts"
        );
    }

    fn zip_with(&self, other: &Jet, op: impl Fn(f64, f64) -> f64) -> Jet {
        self.check_compatible(other);
        let order = self.order.min(other.order);
        let n = self.layout.len(order);
        let c = (0..n).map(|i| op(self.c[i], other.c[i])).collect();
        Jet {
            layout: self.layout,
            order,
            c,
        }
    }

    pub fn mul_jet(&self, other: &Jet) -> Jet {
        self.check_compatible(other);
        let order = self.order.min(other.order);
        let mut c = vec![0.0; self.layout.len(order)];
        for &(i, j, k) in &self.layout.triples[..self.layout.triple_end[order]] {
            c[k as usize] += self.c[i as usize] * other.c[j as usize];
        }
        Jet {
            layout: self.layout,
            order,
            c,
        }
    }

    /// `Σ_k derivs[k] / k! · (f - f(u))^k`, the composition `φ ∘ f` given the
    /// derivatives of `φ` at `f(u)`.
    fn compose(&self, derivs: &[f64]) -> Jet {
        debug_assert!(derivs.len() > self.order);
        let mut h = self.clone();
        h.c[0] = 0.0;
        let mut out = Jet::constant(self.nvars(), self.order, derivs[0]);
        let mut power = Jet::constant(self.nvars(), self.order, 1.0);
        let mut kfact = 1.0;
        for (k, d) in derivs.iter().enumerate().take(self.order + 1).skip(1) {
            power = power.mul_jet(&h);
            kfact *= k as f64;
            if *d != 0.0 {
                for (o, p) in out.c.iter_mut().zip(&power.c) {
                    *o += d / kfact * p;
                }
            }
        }
        out
    }

    pub fn recip(&self) -> Result<Jet> {
        let a = self.value();
        if a == 0.0 || !a.is_finite() {
            return Err(Error::Domain(format!("division by {a}")));
        }
        let derivs: Vec<f64> = (0..=self.order)
            .map(|k| {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * factorial(k) / a.powi(k as i32 + 1)
            })
            .collect();
        Ok(self.compose(&derivs))
    }

    pub fn div_jet(&self, other: &Jet) -> Result<Jet> {
        Ok(self.mul_jet(&other.recip()?))
    }

    pub fn sqrt(&self) -> Result<Jet> {
        let a = self.value();
        if a < 0.0 || (a == 0.0 && self.order > 0) || !a.is_finite() {
            return Err(Error::Domain(format!("sqrt of {a}")));
        }
        // d^k/dx^k x^(1/2) = (1/2)(1/2 - 1)...(1/2 - k + 1) x^(1/2 - k)
        let mut derivs = Vec::with_capacity(self.order + 1);
        let mut coef = 1.0;
        for k in 0..=self.order {
            derivs.push(coef * a.powf(0.5 - k as f64));
            coef *= 0.5 - k as f64;
        }
        Ok(self.compose(&derivs))
    }

    pub fn exp(&self) -> Jet {
        let e = self.value().exp();
        self.compose(&vec![e; self.order + 1])
    }

    pub fn ln(&self) -> Result<Jet> {
        let a = self.value();
        if a <= 0.0 || !a.is_finite() {
            return Err(Error::Domain(format!("log of {a}")));
        }
        let mut derivs = vec![a.ln()];
        for k in 1..=self.order {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            derivs.push(sign * factorial(k - 1) / a.powi(k as i32));
        }
        Ok(self.compose(&derivs))
    }

    pub fn sin(&self) -> Jet {
        let a = self.value();
        let derivs: Vec<f64> = (0..=self.order)
            .map(|k| match k % 4 {
                0 => a.sin(),
                1 => a.cos(),
                2 => -a.sin(),
                _ => -a.cos(),
            })
            .collect();
        self.compose(&derivs)
    }

    pub fn cos(&self) -> Jet {
        let a = self.value();
        let derivs: Vec<f64> = (0..=self.order)
            .map(|k| match k % 4 {
                0 => a.cos(),
                1 => -a.sin(),
                2 => -a.cos(),
                _ => a.sin(),
            })
            .collect();
        self.compose(&derivs)
    }

    pub fn tan(&self) -> Result<Jet> {
        if self.value().cos() == 0.0 {
            return Err(Error::Domain(format!("tan at {}", self.value())));
        }
        self.sin().div_jet(&self.cos())
    }

    pub fn powi(&self, n: i32) -> Result<Jet> {
        if n < 0 {
            return self.powi(-n)?.recip();
        }
        let mut result = Jet::constant(self.nvars(), self.order, 1.0);
        let mut base = self.clone();
        let mut e = n as u32;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul_jet(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_jet(&base);
            }
        }
        Ok(result)
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|x| x.is_finite())
    }

    /// Largest absolute Taylor coefficient.
    pub fn max_abs(&self) -> f64 {
        self.c.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

macro_rules! jet_binop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait<&Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                $body(self, rhs)
            }
        }
        impl $trait<Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                $body(&self, &rhs)
            }
        }
        impl $trait<&Jet> for Jet {
            type Output = Jet;
            fn $method(self, rhs: &Jet) -> Jet {
                $body(&self, rhs)
            }
        }
        impl $trait<Jet> for &Jet {
            type Output = Jet;
            fn $method(self, rhs: Jet) -> Jet {
                $body(self, &rhs)
            }
        }
    };
}

jet_binop!(Add, add, |a: &Jet, b: &Jet| a.zip_with(b, |x, y| x + y));
jet_binop!(Sub, sub, |a: &Jet, b: &Jet| a.zip_with(b, |x, y| x - y));
jet_binop!(Mul, mul, |a: &Jet, b: &Jet| a.mul_jet(b));

impl Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

/// Sum of jets; `None` for an empty iterator.
pub fn sum<'a>(items: impl IntoIterator<Item = &'a Jet>) -> Option<Jet> {
    let mut it = items.into_iter();
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, x| acc + x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficient_count_matches_layout() {
        for d in 1..=MAX_VARS {
            let layout = JetLayout::get(d);
            for k in 0..=MAX_ORDER {
                assert_eq!(layout.len(k), coefficient_count(d, k));
            }
        }
    }

    #[test]
    fn lower_orders_are_prefixes() {
        let layout = JetLayout::get(3);
        for i in 0..layout.len(2) {
            let deg: u8 = layout.multi_index(i).iter().sum();
            assert!(deg <= 2);
        }
        assert_eq!(layout.index_of(&[0, 0, 0]), Some(0));
        assert_eq!(layout.index_of(&[1, 0, 0]), Some(1));
    }

    #[test]
    fn bilinear_product() {
        // f = x1 * y1 at (1, 0, 2, 0)
        let u = [1.0, 0.0, 2.0, 0.0];
        let v = Jet::seed(&u, 1);
        let f = &v[0] * &v[2];
        assert_eq!(f.value(), 2.0);
        assert_eq!(f.gradient(0), 2.0);
        assert_eq!(f.gradient(2), 1.0);
        assert_eq!(f.gradient(1), 0.0);
        assert_eq!(f.gradient(3), 0.0);
    }

    #[test]
    fn sine_taylor() {
        let x = Jet::variable(1, 2, 0, 0.0);
        let s = x.sin();
        assert_eq!(s.value(), 0.0);
        assert_eq!(s.derivative(&[1]), 1.0);
        assert_eq!(s.derivative(&[2]), 0.0);
    }

    #[test]
    fn partial_lowers_order() {
        let v = Jet::seed(&[0.5, -0.25], 3);
        // f = x^2 y
        let f = &(&v[0] * &v[0]) * &v[1];
        let fx = f.partial(0);
        assert_eq!(fx.order(), 2);
        assert!((fx.value() - 2.0 * 0.5 * -0.25).abs() < 1e-15);
        assert!((fx.derivative(&[1, 0]) - 2.0 * -0.25).abs() < 1e-15);
        assert!((fx.derivative(&[0, 1]) - 1.0).abs() < 1e-15);
        assert!((f.derivative(&[2, 1]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn elementary_functions_match_closed_forms() {
        let x = Jet::variable(1, 4, 0, 0.7);
        let e = x.exp();
        for k in 0..=4u8 {
            assert!((e.derivative(&[k]) - 0.7f64.exp()).abs() < 1e-12);
        }
        let l = x.ln().unwrap();
        assert!((l.derivative(&[3]) - 2.0 / 0.7f64.powi(3)).abs() < 1e-10);
        let s = x.sqrt().unwrap();
        assert!((s.derivative(&[2]) + 0.25 * 0.7f64.powf(-1.5)).abs() < 1e-12);
        let r = x.recip().unwrap();
        assert!((r.derivative(&[2]) - 2.0 / 0.7f64.powi(3)).abs() < 1e-10);
        let t = x.tan().unwrap();
        let sec2 = 1.0 / 0.7f64.cos().powi(2);
        assert!((t.derivative(&[1]) - sec2).abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        let x = Jet::variable(1, 2, 0, -1.0);
        assert!(x.sqrt().is_err());
        assert!(x.ln().is_err());
        let z = Jet::variable(1, 2, 0, 0.0);
        assert!(z.recip().is_err());
        assert!(z.sqrt().is_err());
        assert!(z.powi(-1).is_err());
    }

    #[test]
    fn mixed_orders_truncate() {
        let a = Jet::variable(2, 3, 0, 1.0);
        let b = Jet::variable(2, 1, 1, 2.0);
        assert_eq!((&a * &b).order(), 1);
        assert_eq!((&a + &b).order(), 1);
    }
}
