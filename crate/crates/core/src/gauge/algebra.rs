//! The de Sitter algebra `so_η(5)` in its defining 5×5 representation.

use nalgebra::{DMatrix, DVector};
use ndarray::Array3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ncalg::LieStructure;

/// Default signature: Euclidean `so(4)` block with `η_55 = −1`, the sign
/// for which `[P, P] = −l^{-2} F`.
pub const DEFAULT_ETA: [f64; 5] = [1.0, 1.0, 1.0, 1.0, -1.0];

/// Lorentzian signature `diag(1, −1, −1, −1, −1)`.
pub const LORENTZIAN_ETA: [f64; 5] = [1.0, -1.0, -1.0, -1.0, -1.0];

/// One generator label: `F_{αβ}` (α < β) or `P_α`, zero-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    F(usize, usize),
    P(usize),
}

/// Generators `F_{αβ} = M_{αβ}` (6) followed by `P_α = l^{-1} M_{5α}` (4),
/// with `(M_AB)^C_D = η_AD δ^C_B − η_BD δ^C_A`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeSitterAlgebra {
    pub eta: [f64; 5],
    pub l: f64,
    pub labels: Vec<Generator>,
    pub generators: Vec<DMatrix<f64>>,
    /// `[T_a, T_b] = f^{ab}_c T_c`.
    pub structure: LieStructure,
}

/// `(M_AB)^C_D` for zero-based `A, B`.
pub fn rotation_generator(eta: &[f64; 5], a: usize, b: usize) -> DMatrix<f64> {
    DMatrix::from_fn(5, 5, |c, d| {
        let mut v = 0.0;
        if a == d && c == b {
            v += eta[a];
        }
        if b == d && c == a {
            v -= eta[b];
        }
        v
    })
}

impl DeSitterAlgebra {
    pub fn new(eta: [f64; 5], l: f64) -> Result<Self> {
        if eta.iter().any(|&e| e != 1.0 && e != -1.0) {
            return Err(Error::Invalid(format!("η entries must be ±1, got {eta:?}")));
        }
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::Invalid(format!("de Sitter radius must be positive, got {l}")));
        }
        let mut labels = Vec::with_capacity(10);
        for a in 0..4 {
            for b in a + 1..4 {
                labels.push(Generator::F(a, b));
            }
        }
        labels.extend((0..4).map(Generator::P));
        let generators: Vec<DMatrix<f64>> = labels
            .iter()
            .map(|g| match *g {
                Generator::F(a, b) => rotation_generator(&eta, a, b),
                Generator::P(a) => rotation_generator(&eta, 4, a) / l,
            })
            .collect();
        let structure = structure_constants(&generators)?;
        Ok(DeSitterAlgebra {
            eta,
            l,
            labels,
            generators,
            structure,
        })
    }

    pub fn default_euclidean(l: f64) -> Result<Self> {
        DeSitterAlgebra::new(DEFAULT_ETA, l)
    }

    pub fn dim(&self) -> usize {
        self.generators.len()
    }

    pub fn index_of(&self, g: Generator) -> Option<usize> {
        self.labels.iter().position(|x| *x == g)
    }

    /// Index of `F_{αβ}` with the sign for `α > β`.
    pub fn f_index(&self, a: usize, b: usize) -> Option<(usize, f64)> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => self.index_of(Generator::F(a, b)).map(|i| (i, 1.0)),
            std::cmp::Ordering::Greater => self.index_of(Generator::F(b, a)).map(|i| (i, -1.0)),
            std::cmp::Ordering::Equal => None,
        }
    }

    /// `Σ_a c_a T_a`.
    pub fn combine(&self, coeffs: &[f64]) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(5, 5);
        for (c, t) in coeffs.iter().zip(&self.generators) {
            out += t * *c;
        }
        out
    }

    /// Components of a matrix in the generator basis, with the residual of
    /// the projection (zero for algebra elements).
    pub fn decompose(&self, m: &DMatrix<f64>) -> (Vec<f64>, f64) {
        decompose_in(&self.generators, m)
    }

    /// `max |[M_AB, M_CD] − (η_AC M_BD − η_BC M_AD − η_AD M_BC + η_BD M_AC)|`
    /// over all index quadruples.
    pub fn rotation_commutator_residual(&self) -> f64 {
        let e = &self.eta;
        let m = |a: usize, b: usize| rotation_generator(e, a, b);
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let mut worst: f64 = 0.0;
        for a in 0..5 {
            for b in 0..5 {
                for c in 0..5 {
                    for d in 0..5 {
                        let lhs = &m(a, b) * m(c, d) - m(c, d) * m(a, b);
                        let rhs = m(b, d) * (e[a] * delta(a, c)) - m(a, d) * (e[b] * delta(b, c))
                            - m(b, c) * (e[a] * delta(a, d))
                            + m(a, c) * (e[b] * delta(b, d));
                        worst = worst.max((lhs - rhs).amax());
                    }
                }
            }
        }
        worst
    }

    fn f_mat(&self, a: usize, b: usize) -> DMatrix<f64> {
        match self.f_index(a, b) {
            Some((i, s)) => &self.generators[i] * s,
            None => DMatrix::zeros(5, 5),
        }
    }

    fn p_mat(&self, a: usize) -> &DMatrix<f64> {
        &self.generators[6 + a]
    }

    /// Largest residual of the split relations
    /// `[F_{αβ}, F_{γδ}] = η_αγ F_βδ − η_βγ F_αδ + η_βδ F_αγ − η_αδ F_βγ`,
    /// `[P_α, P_β] = −l^{-2} F_{αβ}` and `[F_{βγ}, P_α] = η_αβ P_γ − η_αγ P_β`,
    /// all implied by the `M_AB` commutators. The middle relation holds when
    /// `η_55 = −1`; [`Self::split_residual_general`] checks the form
    /// `[P_α, P_β] = η_55 l^{-2} F_{αβ}` valid for either sign.
    pub fn split_residual(&self) -> f64 {
        self.split_residual_with(-1.0)
    }

    /// As [`Self::split_residual`] with `[P_α, P_β] = η_55 l^{-2} F_{αβ}`.
    pub fn split_residual_general(&self) -> f64 {
        self.split_residual_with(self.eta[4])
    }

    fn split_residual_with(&self, pp_sign: f64) -> f64 {
        let e = &self.eta;
        let comm = |x: &DMatrix<f64>, y: &DMatrix<f64>| x * y - y * x;
        let eq = |a: usize, b: usize| if a == b { e[a] } else { 0.0 };
        let mut worst: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let pp = comm(self.p_mat(a), self.p_mat(b)) - self.f_mat(a, b) * (pp_sign / (self.l * self.l));
                worst = worst.max(pp.amax());
                for c in 0..4 {
                    let pf = comm(&self.f_mat(b, c), self.p_mat(a))
                        - (self.p_mat(c) * eq(a, b) - self.p_mat(b) * eq(a, c));
                    worst = worst.max(pf.amax());
                    for d in 0..4 {
                        let ff = comm(&self.f_mat(a, b), &self.f_mat(c, d))
                            - (self.f_mat(b, d) * eq(a, c) - self.f_mat(a, d) * eq(b, c)
                                + self.f_mat(a, c) * eq(b, d)
                                - self.f_mat(b, c) * eq(a, d));
                        worst = worst.max(ff.amax());
                    }
                }
            }
        }
        worst
    }

    /// Largest residual of `[T_a, T_b] = f^{ab}_c T_c` over all pairs.
    pub fn structure_residual(&self) -> f64 {
        let s = self.dim();
        let mut worst: f64 = 0.0;
        for a in 0..s {
            for b in 0..s {
                let lhs = &self.generators[a] * &self.generators[b] - &self.generators[b] * &self.generators[a];
                let mut rhs = DMatrix::zeros(5, 5);
                for c in 0..s {
                    rhs += &self.generators[c] * self.structure.get(a, b, c);
                }
                worst = worst.max((lhs - rhs).amax());
            }
        }
        worst
    }

    /// Largest Jacobi residual `[[X, Y], Z] + cyclic` over all generator triples.
    pub fn jacobi_matrix_residual(&self) -> f64 {
        let comm = |x: &DMatrix<f64>, y: &DMatrix<f64>| x * y - y * x;
        let g = &self.generators;
        let mut worst: f64 = 0.0;
        for x in g {
            for y in g {
                for z in g {
                    let j = comm(&comm(x, y), z) + comm(&comm(y, z), x) + comm(&comm(z, x), y);
                    worst = worst.max(j.amax());
                }
            }
        }
        worst
    }
}

fn decompose_in(basis: &[DMatrix<f64>], m: &DMatrix<f64>) -> (Vec<f64>, f64) {
    let rows = m.len();
    let a = DMatrix::from_fn(rows, basis.len(), |r, c| basis[c][r]);
    let v = DVector::from_column_slice(m.as_slice());
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&v, 1e-12).expect("SVD with vectors always solves");
    let resid = (&a * &x - &v).amax();
    (x.iter().copied().collect(), resid)
}

/// Real structure constants of a matrix basis closed under commutators.
pub fn structure_constants(basis: &[DMatrix<f64>]) -> Result<LieStructure> {
    let s = basis.len();
    let mut f = Array3::zeros((s, s, s));
    for a in 0..s {
        for b in a + 1..s {
            let c = &basis[a] * &basis[b] - &basis[b] * &basis[a];
            let (coef, resid) = decompose_in(basis, &c);
            if resid > 1e-10 {
                return Err(Error::Invalid("matrix basis is not closed under commutators".into()));
            }
            for (k, v) in coef.into_iter().enumerate() {
                let v = if v.abs() < 1e-14 { 0.0 } else { v };
                f[[a, b, k]] = v;
                f[[b, a, k]] = -v;
            }
        }
    }
    LieStructure::new(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_antisymmetric_in_labels() {
        let eta = DEFAULT_ETA;
        for a in 0..5 {
            for b in 0..5 {
                let s = rotation_generator(&eta, a, b) + rotation_generator(&eta, b, a);
                assert_eq!(s.amax(), 0.0);
            }
        }
    }

    #[test]
    fn all_relations_hold() {
        for eta in [DEFAULT_ETA, LORENTZIAN_ETA, [1.0; 5]] {
            let alg = DeSitterAlgebra::new(eta, 1.7).unwrap();
            assert!(alg.rotation_commutator_residual() < 1e-12);
            assert!(alg.split_residual_general() < 1e-12);
            assert!(alg.structure_residual() < 1e-12);
            assert!(alg.jacobi_matrix_residual() < 1e-12);
            assert!(alg.structure.jacobi_residual() < 1e-12);
        }
        // The printed [P, P] = −l^{-2} F needs η_55 = −1.
        assert!(DeSitterAlgebra::new(DEFAULT_ETA, 2.0).unwrap().split_residual() < 1e-12);
        assert!(DeSitterAlgebra::new([1.0; 5], 2.0).unwrap().split_residual() > 0.1);
    }

    #[test]
    fn decomposition_round_trip() {
        let alg = DeSitterAlgebra::default_euclidean(1.3).unwrap();
        let coeffs: Vec<f64> = (0..10).map(|k| 0.1 * k as f64 - 0.4).collect();
        let (back, resid) = alg.decompose(&alg.combine(&coeffs));
        assert!(resid < 1e-12);
        for (a, b) in coeffs.iter().zip(back) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(DeSitterAlgebra::new([1.0, 1.0, 1.0, 1.0, 0.5], 1.0).is_err());
    }
}
