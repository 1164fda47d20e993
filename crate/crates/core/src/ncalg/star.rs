//! Star products on polynomials: canonical (Moyal), Lie-type from the
//! truncated BCH kernel, and the two-variable quantum plane.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use ndarray::Array3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::poly::{add_exps, add_keys, exponent, unit, Key, Poly};
use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Constant antisymmetric `θ^{ij}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaMatrix {
    theta: DMatrix<f64>,
}

impl ThetaMatrix {
    pub fn new(theta: DMatrix<f64>) -> Result<Self> {
        if !theta.is_square() {
            return Err(Error::Shape("θ must be square".into()));
        }
        if !theta.iter().all(|x| x.is_finite()) {
            return Err(Error::Invalid("θ has non-finite entries".into()));
        }
        let asym = (&theta + theta.transpose()).amax();
        if asym > 0.0 {
            return Err(Error::Invalid(format!("θ must be antisymmetric (|θ + θᵀ| = {asym:e})")));
        }
        Ok(ThetaMatrix { theta })
    }

    /// Builds θ from its strict upper triangle, row by row.
    pub fn from_upper(n: usize, upper: &[f64]) -> Result<Self> {
        if upper.len() != n * (n - 1) / 2 {
            return Err(Error::Shape(format!(
                "θ in {n} variables needs {} upper entries, got {}",
                n * (n - 1) / 2,
                upper.len()
            )));
        }
        let mut theta = DMatrix::zeros(n, n);
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                theta[(i, j)] = upper[k];
                theta[(j, i)] = -upper[k];
                k += 1;
            }
        }
        ThetaMatrix::new(theta)
    }

    pub fn zero(n: usize) -> Self {
        ThetaMatrix {
            theta: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.theta.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.theta[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.theta
    }

    pub fn scaled(&self, s: f64) -> Self {
        ThetaMatrix {
            theta: &self.theta * s,
        }
    }
}

/// Structure constants `f^{ab}_c` of `[I^a, I^b] = i f^{ab}_c I^c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LieStructure {
    f: Array3<f64>,
    /// Nonzero entries `(a, b, c, f^{ab}_c)`.
    nonzero: Vec<(usize, usize, usize, f64)>,
}

impl LieStructure {
    pub fn new(f: Array3<f64>) -> Result<Self> {
        let (s, s2, s3) = f.dim();
        if s != s2 || s != s3 {
            return Err(Error::Shape("structure constants must be S×S×S".into()));
        }
        for a in 0..s {
            for b in 0..s {
                for c in 0..s {
                    if f[[a, b, c]] + f[[b, a, c]] != 0.0 {
                        return Err(Error::Invalid(format!(
                            "structure constants not antisymmetric at ({a}, {b}, {c})"
                        )));
                    }
                }
            }
        }
        let nonzero = f
            .indexed_iter()
            .filter(|(_, v)| **v != 0.0)
            .map(|((a, b, c), v)| (a, b, c, *v))
            .collect();
        Ok(LieStructure { f, nonzero })
    }

    pub fn dim(&self) -> usize {
        self.f.dim().0
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.f[[a, b, c]]
    }

    pub fn constants(&self) -> &Array3<f64> {
        &self.f
    }

    pub fn scaled(&self, s: f64) -> Self {
        LieStructure::new(self.f.mapv(|x| x * s)).expect("scaling keeps antisymmetry")
    }

    /// `su(2)`: `f^{ab}_c = ε_{abc}`.
    pub fn su2() -> Self {
        let mut f = Array3::zeros((3, 3, 3));
        for (a, b, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            f[[a, b, c]] = 1.0;
            f[[b, a, c]] = -1.0;
        }
        LieStructure::new(f).expect("ε is antisymmetric")
    }

    /// Central extension encoding a constant θ: variables `u1 … uN` plus a
    /// central `z` (last) with `[u^i, u^j] = i θ^{ij} z`.
    pub fn heisenberg(theta: &ThetaMatrix) -> Self {
        let n = theta.dim();
        let mut f = Array3::zeros((n + 1, n + 1, n + 1));
        for i in 0..n {
            for j in 0..n {
                f[[i, j, n]] = theta.get(i, j);
            }
        }
        LieStructure::new(f).expect("θ is antisymmetric")
    }

    /// `max |f^{ab}_m f^{mc}_n + f^{bc}_m f^{ma}_n + f^{ca}_m f^{mb}_n|`.
    pub fn jacobi_residual(&self) -> f64 {
        let s = self.dim();
        let f = &self.f;
        let mut worst: f64 = 0.0;
        for a in 0..s {
            for b in 0..s {
                for c in 0..s {
                    for n in 0..s {
                        let mut acc = 0.0;
                        for m in 0..s {
                            acc += f[[a, b, m]] * f[[m, c, n]]
                                + f[[b, c, m]] * f[[m, a, n]]
                                + f[[c, a, m]] * f[[m, b, n]];
                        }
                        worst = worst.max(acc.abs());
                    }
                }
            }
        }
        worst
    }
}

/// Highest order in the structure constants that [`lie_star`] implements.
pub const LIE_MAX_ORDER: usize = 2;

/// How quantum-plane products are ordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QOrdering {
    /// Every product is rewritten with `u` before `v` using `v u = q^{-1} u v`.
    #[default]
    Normal,
    /// The symmetric exponent rule `q^{(a d − b c)/2}`.
    Symmetric,
}

/// A chosen star product with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum StarProduct {
    Moyal(ThetaMatrix),
    Lie { structure: LieStructure, order: usize },
    QPlane { q: Complex64, ordering: QOrdering },
}

impl StarProduct {
    pub fn star(&self, f: &Poly, g: &Poly) -> Result<Poly> {
        match self {
            StarProduct::Moyal(theta) => moyal_star(f, g, theta),
            StarProduct::Lie { structure, order } => lie_star(f, g, structure, *order),
            StarProduct::QPlane { q, ordering } => qplane_star(f, g, *q, *ordering),
        }
    }
}

/// `f ⋆ g − g ⋆ f`.
pub fn star_commutator(f: &Poly, g: &Poly, product: &StarProduct) -> Result<Poly> {
    Ok(&product.star(f, g)? - &product.star(g, f)?)
}

fn check_vars(f: &Poly, g: &Poly, n: usize, what: &str) -> Result<()> {
    if f.nvars() != n || g.nvars() != n {
        return Err(Error::Shape(format!(
            "{what} over {n} variables applied to polynomials in {} and {}",
            f.nvars(),
            g.nvars()
        )));
    }
    Ok(())
}

type BiPoly = BTreeMap<(Key, Key), Complex64>;

fn bi_add(map: &mut BiPoly, key: (Key, Key), c: Complex64) {
    let e = map.entry(key).or_default();
    *e += c;
}

/// `Σ_k (i/2)^k / k! · θ^{i1 j1} ⋯ θ^{ik jk} ∂_{i1…ik} f ∂_{j1…jk} g`, exact on
/// polynomials.
pub fn moyal_star(f: &Poly, g: &Poly, theta: &ThetaMatrix) -> Result<Poly> {
    let mut out = Poly::zero(theta.dim());
    for term in moyal_terms(f, g, theta, None)? {
        out = &out + &term;
    }
    Ok(out)
}

/// The homogeneous pieces of the Moyal product: entry `k` is the term of
/// order `θ^k`. With `max_order = Some(K)` the series stops after `K`.
///
/// The k-th term is obtained by applying `θ^{ij} ∂_i ⊗ ∂_j` k times to the
/// tensor `f ⊗ g`, kept as a map over monomial pairs.
pub fn moyal_terms(f: &Poly, g: &Poly, theta: &ThetaMatrix, max_order: Option<usize>) -> Result<Vec<Poly>> {
    let n = theta.dim();
    check_vars(f, g, n, "θ")?;
    let pairs: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter_map(|(i, j)| {
            let t = theta.get(i, j);
            (t != 0.0).then_some((i, j, t))
        })
        .collect();
    let mut current: BiPoly = BiPoly::new();
    for (ea, ca) in f.packed_terms() {
        for (eb, cb) in g.packed_terms() {
            bi_add(&mut current, (ea, eb), ca * cb);
        }
    }
    let mut out = Vec::new();
    let mut weight = Complex64::new(1.0, 0.0);
    let mut k = 0usize;
    loop {
        let mut term = Poly::zero(n);
        for ((ea, eb), c) in &current {
            term.add_packed(add_keys(*ea, *eb), c * weight);
        }
        out.push(term);
        if current.is_empty() || max_order.is_some_and(|m| k >= m) {
            break;
        }
        k += 1;
        weight *= I * 0.5 / k as f64;
        let mut next = BiPoly::new();
        for ((ea, eb), c) in &current {
            for &(i, j, t) in &pairs {
                let (pi, pj) = (exponent(*ea, i), exponent(*eb, j));
                if pi > 0 && pj > 0 {
                    bi_add(&mut next, (ea - unit(i), eb - unit(j)), c * (t * pi as f64 * pj as f64));
                }
            }
        }
        next.retain(|_, c| *c != Complex64::new(0.0, 0.0));
        current = next;
    }
    if let Some(m) = max_order {
        out.resize(m + 1, Poly::zero(n));
    }
    Ok(out)
}

/// Lie-type star product truncated at `order` (≤ 2) in the structure
/// constants.
///
/// The kernel `e^{ik·u} ⋆ e^{ip·u} = e^{i(k + p + ½ g(k, p))·u}` with
/// `g_n = −k_i p_j f^{ij}_n + ⅙ k_i p_j (p_l − k_l) f^{ij}_m f^{ml}_n` is turned
/// into a bidifferential operator by the Fourier symbols `k → −i∂'`,
/// `p → −i∂''`. Expanding `exp(½ i u·g)` to second order gives
///
/// * order 1: `½ i u^n f^{ij}_n ∂_i f ∂_j g`
/// * order 2: `−⅛ u^n u^m f^{ij}_n f^{kl}_m ∂_{ik} f ∂_{jl} g
///   − (1/12) u^n f^{ij}_m f^{ml}_n (∂_i f ∂_{jl} g − ∂_{il} f ∂_j g)`.
pub fn lie_star(f: &Poly, g: &Poly, lie: &LieStructure, order: usize) -> Result<Poly> {
    lie_star_signed(f, g, lie, order, -1.0)
}

/// `symbol` is the sign in `k → symbol · i∂`; only the cubic kernel term
/// depends on it.
pub(crate) fn lie_star_signed(
    f: &Poly,
    g: &Poly,
    lie: &LieStructure,
    order: usize,
    symbol: f64,
) -> Result<Poly> {
    let s = lie.dim();
    check_vars(f, g, s, "Lie structure")?;
    if order > LIE_MAX_ORDER {
        return Err(Error::OrderOverflow {
            requested: order,
            max: LIE_MAX_ORDER,
        });
    }
    let mut out = f.mul_poly(g);
    if order == 0 || f.is_zero() || g.is_zero() {
        return Ok(out);
    }
    let df: Vec<Poly> = (0..s).map(|i| f.partial(i)).collect();
    let dg: Vec<Poly> = (0..s).map(|i| g.partial(i)).collect();
    let u: Vec<Poly> = (0..s).map(|i| Poly::var(s, i)).collect();

    // First order.
    let mut first = Poly::zero(s);
    for &(i, j, n, c) in &lie.nonzero {
        if df[i].is_zero() || dg[j].is_zero() {
            continue;
        }
        first = &first + &(&df[i] * &dg[j]).mul_poly(&u[n]).scale(Complex64::from(c));
    }
    out = &out + &first.scale(I * 0.5);
    if order == 1 {
        return Ok(out);
    }

    let ddf: Vec<Vec<Poly>> = df.iter().map(|p| (0..s).map(|k| p.partial(k)).collect()).collect();
    let ddg: Vec<Vec<Poly>> = dg.iter().map(|p| (0..s).map(|k| p.partial(k)).collect()).collect();

    // Square of the first-order operator.
    let mut square = Poly::zero(s);
    for &(i, j, n, c1) in &lie.nonzero {
        for &(k, l, m, c2) in &lie.nonzero {
            if ddf[i][k].is_zero() || ddg[j][l].is_zero() {
                continue;
            }
            let term = (&ddf[i][k] * &ddg[j][l]).mul_poly(&(&u[n] * &u[m]));
            square = &square + &term.scale(Complex64::from(c1 * c2));
        }
    }
    out = &out + &square.scale(Complex64::from(-0.125));

    // Cubic kernel term: the i³ from the three symbols times ½ i.
    let mut cubic = Poly::zero(s);
    for &(i, j, m, c1) in &lie.nonzero {
        for &(m2, l, n, c2) in &lie.nonzero {
            if m2 != m {
                continue;
            }
            let a = &df[i] * &ddg[j][l];
            let b = &ddf[i][l] * &dg[j];
            let diff = &a - &b;
            if diff.is_zero() {
                continue;
            }
            cubic = &cubic + &diff.mul_poly(&u[n]).scale(Complex64::from(c1 * c2));
        }
    }
    let cubic_weight = symbol.powi(3) / 12.0;
    out = &out + &cubic.scale(Complex64::from(cubic_weight));
    Ok(out)
}

/// Quantum-plane product on polynomials in `(u, v) = (u1, u2)` with
/// `u v = q v u`.
pub fn qplane_star(f: &Poly, g: &Poly, q: Complex64, ordering: QOrdering) -> Result<Poly> {
    check_vars(f, g, 2, "the quantum plane")?;
    if q == Complex64::new(0.0, 0.0) || !q.is_finite() {
        return Err(Error::Invalid(format!("quantum-plane parameter must be finite and nonzero, got {q}")));
    }
    let mut out = Poly::zero(2);
    for (ea, ca) in f.terms() {
        for (eb, cb) in g.terms() {
            let (a, b, c, d) = (ea[0] as i64, ea[1] as i64, eb[0] as i64, eb[1] as i64);
            let factor = match ordering {
                QOrdering::Normal => q.powi(-(b * c) as i32),
                QOrdering::Symmetric => q.powf((a * d - b * c) as f64 / 2.0),
            };
            out.add_term(add_exps(&ea, &eb), ca * cb * factor);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn p(src: &str, n: usize) -> Poly {
        Poly::parse(src, n).unwrap()
    }

    #[test]
    fn moyal_coordinate_commutator() {
        let theta = ThetaMatrix::from_upper(3, &[0.7, -0.2, 1.3]).unwrap();
        let prod = StarProduct::Moyal(theta.clone());
        for i in 0..3 {
            for j in 0..3 {
                let com = star_commutator(&Poly::var(3, i), &Poly::var(3, j), &prod).unwrap();
                let expected = Poly::constant(3, I * theta.get(i, j));
                assert_eq!(com, expected);
            }
        }
    }

    #[test]
    fn moyal_with_zero_theta_is_pointwise() {
        let f = p("u1^2 + 2*u2", 2);
        let g = p("(1-i)*u1*u2 - 3", 2);
        assert_eq!(moyal_star(&f, &g, &ThetaMatrix::zero(2)).unwrap(), f.mul_poly(&g));
    }

    #[test]
    fn moyal_hand_example() {
        // u1² ⋆ u2² = u1² u2² + 2iθ u1 u2 − θ²/2.
        let t = 0.3;
        let theta = ThetaMatrix::from_upper(2, &[t]).unwrap();
        let r = moyal_star(&p("u1^2", 2), &p("u2^2", 2), &theta).unwrap();
        assert_eq!(r.coefficient(&[2, 2]), c(1.0, 0.0));
        assert!((r.coefficient(&[1, 1]) - c(0.0, 2.0 * t)).norm() < 1e-15);
        assert!((r.coefficient(&[0, 0]) - c(-t * t / 2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn theta_validation() {
        assert!(ThetaMatrix::new(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])).is_err());
        assert!(ThetaMatrix::from_upper(3, &[1.0]).is_err());
    }

    #[test]
    fn lie_first_order_commutator() {
        let lie = LieStructure::su2();
        assert_eq!(lie.jacobi_residual(), 0.0);
        let prod = StarProduct::Lie {
            structure: lie.clone(),
            order: 1,
        };
        for i in 0..3 {
            for j in 0..3 {
                let com = star_commutator(&Poly::var(3, i), &Poly::var(3, j), &prod).unwrap();
                let mut expected = Poly::zero(3);
                for k in 0..3 {
                    expected = &expected + &Poly::var(3, k).scale(I * lie.get(i, j, k));
                }
                assert_eq!(com, expected);
            }
        }
        assert!(lie_star(&Poly::var(3, 0), &Poly::var(3, 1), &lie, 3).is_err());
    }

    #[test]
    fn abelian_lie_is_pointwise() {
        let lie = LieStructure::new(Array3::zeros((2, 2, 2))).unwrap();
        let f = p("u1^2 + u2", 2);
        let g = p("u1*u2", 2);
        assert_eq!(lie_star(&f, &g, &lie, 2).unwrap(), f.mul_poly(&g));
    }

    #[test]
    fn lie_second_order_on_low_degree() {
        // u_a ⋆ (u_b u_c) picks up the cubic kernel term
        // −(1/12) u^n (f^{ab}_m f^{mc}_n + f^{ac}_m f^{mb}_n).
        let lie = LieStructure::su2();
        let (a, b, cc) = (0, 0, 1);
        let f = Poly::var(3, a);
        let g = &Poly::var(3, b) * &Poly::var(3, cc);
        let o1 = lie_star(&f, &g, &lie, 1).unwrap();
        let o2 = lie_star(&f, &g, &lie, 2).unwrap();
        let diff = &o2 - &o1;
        let mut expected = Poly::zero(3);
        for n in 0..3 {
            let mut k = 0.0;
            for m in 0..3 {
                k += lie.get(a, b, m) * lie.get(m, cc, n) + lie.get(a, cc, m) * lie.get(m, b, n);
            }
            expected = &expected + &Poly::var(3, n).scale(c(-k / 12.0, 0.0));
        }
        assert!((&diff - &expected).max_abs() < 1e-15);
        assert!(!expected.is_zero());
    }

    fn associator(f: &Poly, g: &Poly, h: &Poly, lie: &LieStructure, symbol: f64) -> f64 {
        let l = |x: &Poly, y: &Poly| lie_star_signed(x, y, lie, 2, symbol).unwrap();
        (&l(&l(f, g), h) - &l(f, &l(g, h))).max_abs()
    }

    #[test]
    fn lie_star_is_associative_to_second_order() {
        // The associator of the order-2 truncation is O(f³): halving the
        // structure constants divides it by 8. The opposite Fourier sign on
        // the cubic term leaves an O(f²) associator.
        let f = p("u1*u2 + u3", 3);
        let g = p("u2^2 - u1", 3);
        let h = p("u3*u1 + 2*u2", 3);
        let lie = LieStructure::su2();
        let r1 = associator(&f, &g, &h, &lie.scaled(0.02), -1.0);
        let r2 = associator(&f, &g, &h, &lie.scaled(0.01), -1.0);
        assert!((r1 / r2 - 8.0).abs() < 0.5, "ratio {}", r1 / r2);
        let w1 = associator(&f, &g, &h, &lie.scaled(0.02), 1.0);
        let w2 = associator(&f, &g, &h, &lie.scaled(0.01), 1.0);
        assert!((w1 / w2 - 4.0).abs() < 0.5, "ratio {}", w1 / w2);
    }

    #[test]
    fn heisenberg_lie_matches_moyal() {
        let theta = ThetaMatrix::from_upper(2, &[0.8]).unwrap();
        let lie = LieStructure::heisenberg(&theta);
        let f = p("u1^2 + (2-i)*u2", 2);
        let g = p("u1*u2 + u2^2", 2);
        let moyal = moyal_star(&f, &g, &theta).unwrap();
        let lifted = lie_star(&f.extend_vars(3), &g.extend_vars(3), &lie, 2).unwrap();
        let reduced = lifted.substitute(2, c(1.0, 0.0));
        assert!((&reduced - &moyal).max_abs() < 1e-12);
    }

    #[test]
    fn qplane_relations() {
        let q = c(0.6, 0.8);
        let (u, v) = (Poly::var(2, 0), Poly::var(2, 1));
        let uv = u.mul_poly(&v);
        let vu = qplane_star(&v, &u, q, QOrdering::Normal).unwrap();
        assert!((&vu - &uv.scale(q.inv())).max_abs() < 1e-15);
        for ord in [QOrdering::Normal, QOrdering::Symmetric] {
            let a = qplane_star(&u, &v, q, ord).unwrap();
            let b = qplane_star(&v, &u, q, ord).unwrap();
            assert!((&a - &b.scale(q)).max_abs() < 1e-15);
        }
        let f = p("u1 + u2^2", 2);
        assert_eq!(qplane_star(&f, &f, c(1.0, 0.0), QOrdering::Normal).unwrap(), f.mul_poly(&f));
        assert!(qplane_star(&u, &v, c(0.0, 0.0), QOrdering::Normal).is_err());
    }
}
