//! Small dense linear algebra over jets and reals.

use nalgebra::DMatrix;
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::jet::Jet;

/// Condition number above which a metric block counts as degenerate.
pub const MAX_CONDITION: f64 = 1e8;

/// Determinant magnitude below which a metric block counts as degenerate.
pub const MIN_DETERMINANT: f64 = 1e-10;

pub fn values(m: &Array2<Jet>) -> DMatrix<f64> {
    let (r, c) = m.dim();
    DMatrix::from_fn(r, c, |i, j| m[[i, j]].value())
}

pub fn constant_matrix(m: &DMatrix<f64>, nvars: usize, order: usize) -> Array2<Jet> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| {
        Jet::constant(nvars, order, m[(i, j)])
    })
}

pub fn matmul(a: &Array2<Jet>, b: &Array2<Jet>) -> Array2<Jet> {
    let (r, k) = a.dim();
    let (k2, c) = b.dim();
    assert_eq!(k, k2, "inner dimensions differ");
    Array2::from_shape_fn((r, c), |(i, j)| {
        let mut acc = &a[[i, 0]] * &b[[0, j]];
        for l in 1..k {
            acc = acc + &a[[i, l]] * &b[[l, j]];
        }
        acc
    })
}

/// Inverts a real matrix, flagging near-singular input.
pub fn checked_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if !m.iter().all(|x| x.is_finite()) {
        return Err(Error::Degenerate(format!("{what} has non-finite entries")));
    }
    let det = m.determinant();
    if det.abs() < MIN_DETERMINANT {
        return Err(Error::Degenerate(format!("{what} is singular (det = {det:e})")));
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    let smin = sv.min();
    if smin <= 0.0 || smax / smin > MAX_CONDITION {
        return Err(Error::Degenerate(format!(
            "{what} is ill-conditioned (condition {:e})",
            smax / smin
        )));
    }
    m.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::Degenerate(format!("{what} is singular")))
}

/// Inverse of a jet-valued matrix. With `M = M0 + H` where `H` has vanishing
/// constant part, `M^{-1} = Σ_k (-M0^{-1} H)^k M0^{-1}`; the sum terminates
/// after `order` terms because `H` is nilpotent in truncated arithmetic.
pub fn inverse(m: &Array2<Jet>, what: &str) -> Result<Array2<Jet>> {
    let (r, c) = m.dim();
    if r != c {
        return Err(Error::Shape(format!("{what} is not square")));
    }
    let proto = &m[[0, 0]];
    let (nvars, order) = (proto.nvars(), m.iter().map(Jet::order).min().unwrap_or(0));
    let inv0 = checked_inverse(&values(m), what)?;
    let inv0_j = constant_matrix(&inv0, nvars, order);
    let h = m.mapv(|x| x.truncate(order).add_constant(-x.value()));
    let step = matmul(&inv0_j, &h).mapv(|x| -x);
    let mut term = inv0_j.clone();
    let mut total = inv0_j;
    for _ in 0..order {
        term = matmul(&step, &term);
        total = total + &term;
    }
    Ok(total)
}

/// Largest |m_ij - m_ji|.
pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}
