//! Complex polynomials in commuting variables `u1 … uN`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Exponent vector of a monomial.
pub type Monomial = Vec<u32>;

/// Largest number of variables a polynomial may have.
pub const MAX_POLY_VARS: usize = 8;

/// Largest exponent of a single variable.
pub const MAX_EXPONENT: u32 = 255;

/// Exponents packed eight bits per variable; adding keys multiplies
/// monomials as long as no exponent exceeds [`MAX_EXPONENT`].
pub(crate) type Key = u64;

pub(crate) fn pack(exps: &[u32]) -> Key {
    exps.iter().enumerate().fold(0, |k, (v, &e)| {
        assert!(e <= MAX_EXPONENT, "exponent {e} exceeds {MAX_EXPONENT}");
        k | ((e as u64) << (8 * v))
    })
}

pub(crate) fn unpack(key: Key, nvars: usize) -> Monomial {
    (0..nvars).map(|v| exponent(key, v)).collect()
}

#[inline]
pub(crate) fn exponent(key: Key, var: usize) -> u32 {
    ((key >> (8 * var)) & 0xff) as u32
}

#[inline]
pub(crate) fn unit(var: usize) -> Key {
    1u64 << (8 * var)
}

fn key_degree(key: Key) -> u32 {
    key.to_le_bytes().iter().map(|&b| b as u32).sum()
}

/// A polynomial with complex coefficients. Zero coefficients are never
/// stored, so structural equality is polynomial equality.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Key, Complex64>,
}

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        assert!(nvars <= MAX_POLY_VARS, "polynomials support at most {MAX_POLY_VARS} variables");
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Complex64) -> Self {
        let mut p = Poly::zero(nvars);
        p.add_packed(0, c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Poly::constant(nvars, Complex64::new(1.0, 0.0))
    }

    /// The coordinate `u_{var+1}` (zero-based `var`).
    pub fn var(nvars: usize, var: usize) -> Self {
        assert!(var < nvars);
        let mut p = Poly::zero(nvars);
        p.add_packed(unit(var), Complex64::new(1.0, 0.0));
        p
    }

    pub fn monomial(nvars: usize, exps: Monomial, c: Complex64) -> Self {
        assert_eq!(exps.len(), nvars, "exponent length must equal nvars");
        let mut p = Poly::zero(nvars);
        p.add_term(exps, c);
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Monomial, Complex64)>) -> Self {
        let mut p = Poly::zero(nvars);
        for (e, c) in terms {
            p.add_term(e, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Terms as (exponent vector, coefficient) pairs.
    pub fn terms(&self) -> impl Iterator<Item = (Monomial, Complex64)> + '_ {
        self.terms.iter().map(|(k, c)| (unpack(*k, self.nvars), *c))
    }

    pub(crate) fn packed_terms(&self) -> impl Iterator<Item = (Key, Complex64)> + '_ {
        self.terms.iter().map(|(k, c)| (*k, *c))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exps: &[u32]) -> Complex64 {
        self.terms.get(&pack(exps)).copied().unwrap_or_default()
    }

    /// Adds `c · u^exps`, dropping the entry if it cancels.
    pub fn add_term(&mut self, exps: Monomial, c: Complex64) {
        assert_eq!(exps.len(), self.nvars, "exponent length must equal nvars");
        self.add_packed(pack(&exps), c);
    }

    pub(crate) fn add_packed(&mut self, key: Key, c: Complex64) {
        if c == ZERO {
            return;
        }
        match self.terms.entry(key) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s == ZERO {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|&k| key_degree(k)).max()
    }

    pub fn scale(&self, c: Complex64) -> Self {
        if c == ZERO {
            return Poly::zero(self.nvars);
        }
        let mut out = Poly::zero(self.nvars);
        for (k, v) in &self.terms {
            out.add_packed(*k, v * c);
        }
        out
    }

    pub fn conj(&self) -> Self {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, v)| (*k, v.conj())).collect(),
        }
    }

    pub fn partial(&self, var: usize) -> Self {
        let mut out = Poly::zero(self.nvars);
        for (&k, c) in &self.terms {
            let e = exponent(k, var);
            if e > 0 {
                out.add_packed(k - unit(var), c * e as f64);
            }
        }
        out
    }

    pub fn eval(&self, u: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(&k, c)| (0..self.nvars).fold(*c, |acc, v| acc * u[v].powu(exponent(k, v))))
            .sum()
    }

    /// Largest coefficient modulus, zero for the zero polynomial.
    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drops every term of total degree above `max_degree`.
    pub fn truncate_degree(&self, max_degree: u32) -> Self {
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(&k, _)| key_degree(k) <= max_degree)
                .map(|(k, c)| (*k, *c))
                .collect(),
        }
    }

    /// Replaces variable `var` by the constant `value` and drops it from the
    /// variable list.
    pub fn substitute(&self, var: usize, value: Complex64) -> Self {
        let mut out = Poly::zero(self.nvars - 1);
        for (e, c) in self.terms() {
            let mut r = e;
            let k = r.remove(var);
            out.add_term(r, c * value.powu(k));
        }
        out
    }

    /// Embeds into a larger variable set, appending unused variables.
    pub fn extend_vars(&self, nvars: usize) -> Self {
        assert!(nvars >= self.nvars);
        let mut out = Poly::zero(nvars);
        out.terms = self.terms.clone();
        out
    }

    fn check_same(&self, other: &Poly) {
        assert_eq!(self.nvars, other.nvars, "polynomials over different variable sets");
    }

    /// Commutative product.
    pub fn mul_poly(&self, other: &Poly) -> Poly {
        self.check_same(other);
        let mut out = Poly::zero(self.nvars);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                out.add_packed(add_keys(*ka, *kb), ca * cb);
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        (0..k).fold(Poly::one(self.nvars), |acc, _| acc.mul_poly(self))
    }

    /// Parses a literal such as `"(1+2i)*u1^2*u2 - u3"`. Variables are
    /// `u1 … uN`; `nvars` fixes `N` (indices beyond it are rejected).
    pub fn parse(src: &str, nvars: usize) -> Result<Poly> {
        if nvars > MAX_POLY_VARS {
            return Err(Error::Invalid(format!(
                "polynomials support at most {MAX_POLY_VARS} variables, got {nvars}"
            )));
        }
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
            nvars,
        };
        let out = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(out)
    }

    /// Number of variables a literal refers to (the largest `uK` index).
    pub fn infer_nvars(src: &str) -> usize {
        let b = src.as_bytes();
        let mut best = 0;
        let mut i = 0;
        while i < b.len() {
            if b[i] == b'u' && (i == 0 || !b[i - 1].is_ascii_alphanumeric()) {
                let start = i + 1;
                let mut j = start;
                while j < b.len() && b[j].is_ascii_digit() {
                    j += 1;
                }
                if let Ok(k) = src[start..j].parse::<usize>() {
                    best = best.max(k);
                }
                i = j;
            } else {
                i += 1;
            }
        }
        best
    }
}

/// Product of packed monomials.
#[inline]
pub(crate) fn add_keys(a: Key, b: Key) -> Key {
    let s = a + b;
    debug_assert!(
        (0..MAX_POLY_VARS).all(|v| exponent(a, v) + exponent(b, v) <= MAX_EXPONENT),
        "exponent overflow"
    );
    s
}

pub(crate) fn add_exps(a: &[u32], b: &[u32]) -> Monomial {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

impl Add<&Poly> for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        self.check_same(rhs);
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_packed(*k, *c);
        }
        out
    }
}

impl Sub<&Poly> for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        self.check_same(rhs);
        let mut out = self.clone();
        for (k, c) in &rhs.terms {
            out.add_packed(*k, -c);
        }
        out
    }
}

impl Mul<&Poly> for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        self.mul_poly(rhs)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, c)) in self.terms().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({}{:+}i)", c.re, c.im)?;
            for (v, &p) in e.iter().enumerate() {
                match p {
                    0 => {}
                    1 => write!(f, "*u{}", v + 1)?,
                    _ => write!(f, "*u{}^{}", v + 1, p)?,
                }
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    nvars: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Parse {
            position: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Poly> {
        let mut acc = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                -&self.term()?
            }
            Some(b'+') => {
                self.pos += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.power()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = acc.mul_poly(&self.power()?);
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<Poly> {
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
            let k: u32 = text.parse().map_err(|_| {
                self.pos = start;
                self.error("expected a non-negative integer exponent")
            })?;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Poly> {
        let n = self.nvars;
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b'i') => {
                self.pos += 1;
                Ok(Poly::constant(n, Complex64::new(0.0, 1.0)))
            }
            Some(b'u') => {
                let at = self.pos;
                self.pos += 1;
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let k: usize = std::str::from_utf8(&self.src[start..self.pos])
                    .unwrap_or("")
                    .parse()
                    .map_err(|_| self.error("expected a variable index after `u`"))?;
                if k == 0 || k > n {
                    self.pos = at;
                    return Err(Error::UnknownSymbol(format!("u{k} (variables are u1..u{n})")));
                }
                Ok(Poly::var(n, k - 1))
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.')
                {
                    self.pos += 1;
                }
                if self.pos < self.src.len() && matches!(self.src[self.pos], b'e' | b'E') {
                    let save = self.pos;
                    self.pos += 1;
                    if self.pos < self.src.len() && matches!(self.src[self.pos], b'+' | b'-') {
                        self.pos += 1;
                    }
                    let digits = self.pos;
                    while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                    if digits == self.pos {
                        self.pos = save;
                    }
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                let v: f64 = text.parse().map_err(|_| {
                    self.pos = start;
                    self.error("malformed number")
                })?;
                // A trailing `i` makes the literal imaginary, as in `2i`.
                if self.src.get(self.pos) == Some(&b'i') {
                    self.pos += 1;
                    return Ok(Poly::constant(n, Complex64::new(0.0, v)));
                }
                Ok(Poly::constant(n, Complex64::new(v, 0.0)))
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn parses_complex_literal() {
        let p = Poly::parse("(1+2i)*u1^2*u2 - u3", 3).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.coefficient(&[2, 1, 0]), c(1.0, 2.0));
        assert_eq!(p.coefficient(&[0, 0, 1]), c(-1.0, 0.0));
        assert_eq!(Poly::infer_nvars("(1+2i)*u1^2*u2 - u3"), 3);
        assert_eq!(Poly::parse("2i*u1 - i", 1).unwrap().coefficient(&[0]), c(0.0, -1.0));
        assert_eq!(Poly::parse("(u1 + u2)^2", 2).unwrap().coefficient(&[1, 1]), c(2.0, 0.0));
        assert_eq!(Poly::parse("1.5e2", 1).unwrap().coefficient(&[0]), c(150.0, 0.0));
    }

    #[test]
    fn rejects_bad_literals() {
        assert!(matches!(Poly::parse("u1 +", 1), Err(Error::Parse { .. })));
        assert!(matches!(Poly::parse("u4", 3), Err(Error::UnknownSymbol(_))));
        assert!(matches!(Poly::parse("u1^x", 1), Err(Error::Parse { position: 3, .. })));
        assert!(Poly::parse("(u1", 1).is_err());
    }

    #[test]
    fn cancellation_removes_terms() {
        let p = Poly::parse("u1*u2 - u2*u1", 2).unwrap();
        assert!(p.is_zero());
        assert_eq!(p.degree(), None);
    }

    #[test]
    fn derivative_and_eval() {
        let p = Poly::parse("3*u1^2*u2 + i*u2", 2).unwrap();
        let d = p.partial(0);
        assert_eq!(d.coefficient(&[1, 1]), c(6.0, 0.0));
        let v = p.eval(&[c(2.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(v, c(12.0, 1.0));
        assert_eq!(p.substitute(1, c(2.0, 0.0)).coefficient(&[2]), c(6.0, 0.0));
    }
}
