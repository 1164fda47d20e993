//! Vielbeins, Clifford generators, the spin-lifted d-connection, the Dirac
//! d-operator and the heat-kernel densities of the cutoff spectral action.
//!
//! Everything is Euclidean. The flat gammas are Hermitian with
//! `{γ^a, γ^b} = 2 δ^{ab} I`. Frame indices are written with a bar in the
//! docs (`ā`); the curved index `α` always refers to the adapted basis
//! `(δ_i, ∂_a)`, so the relevant metric is the block metric `diag(g, h)`.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bundle::{GeometryJets, GeometrySource};
use crate::connection::ConnectionSelector;
use crate::curvature::{ricci_jets, scalar_jet, LocalGeometry};
use crate::dsl::{BundleShape, ScalarField};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::linalg;

/// Weight of the gamma bilinear in `Γ^[S]_μ = SPIN_LIFT · Γ_{āb̄μ} γ^ā γ^b̄`.
pub const SPIN_LIFT: f64 = 0.5;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);
const CI: Complex64 = Complex64::new(0.0, 1.0);

/// Flat Euclidean Clifford generators in dimension `d`, each of size
/// `2^⌊d/2⌋`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaSet {
    pub dim: usize,
    pub matrices: Vec<DMatrix<Complex64>>,
}

fn pauli() -> [DMatrix<Complex64>; 3] {
    [
        DMatrix::from_row_slice(2, 2, &[C0, C1, C1, C0]),
        DMatrix::from_row_slice(2, 2, &[C0, -CI, CI, C0]),
        DMatrix::from_row_slice(2, 2, &[C1, C0, C0, -C1]),
    ]
}

impl GammaSet {
    /// Builds the generators by the usual doubling: the even set in `2k + 2`
    /// dimensions is `{Γ_j ⊗ σ3, I ⊗ σ1, I ⊗ σ2}`; odd dimensions append the
    /// grading operator `(−i)^k Γ_1 ⋯ Γ_{2k}`.
    pub fn new(dim: usize) -> Result<Self> {
        if !(1..=6).contains(&dim) {
            return Err(Error::Invalid(format!(
                "gamma matrices supported for dimensions 1..=6, got {dim}"
            )));
        }
        let [s1, s2, s3] = pauli();
        let mut even: Vec<DMatrix<Complex64>> = Vec::new();
        let mut size = 1;
        for _ in 0..dim / 2 {
            let id = DMatrix::<Complex64>::identity(size, size);
            let mut next: Vec<_> = even.iter().map(|g| g.kronecker(&s3)).collect();
            next.push(id.kronecker(&s1));
            next.push(id.kronecker(&s2));
            even = next;
            size *= 2;
        }
        let mut matrices = even;
        if dim % 2 == 1 {
            let k = dim / 2;
            let mut chi = DMatrix::<Complex64>::identity(size, size);
            for g in &matrices {
                chi = chi * g;
            }
            chi *= (-CI).powu(k as u32);
            matrices.push(chi);
        }
        Ok(GammaSet { dim, matrices })
    }

    /// Spinor dimension `2^⌊d/2⌋`, which is also `tr I`.
    pub fn size(&self) -> usize {
        1 << (self.dim / 2)
    }

    /// Largest entry of `{γ^a, γ^b} − 2 δ^{ab} I` over all pairs.
    pub fn clifford_residual(&self) -> f64 {
        let target = DMatrix::<f64>::identity(self.dim, self.dim) * 2.0;
        anticommutator_residual(&self.matrices, &target)
    }

    /// Largest deviation from Hermiticity.
    pub fn hermiticity_residual(&self) -> f64 {
        self.matrices
            .iter()
            .map(|g| max_norm(&(g - g.adjoint())))
            .fold(0.0, f64::max)
    }
}

/// Largest entry modulus of a complex matrix.
pub fn max_norm(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max |{γ_a, γ_b} − target_{ab} I|`.
pub fn anticommutator_residual(gammas: &[DMatrix<Complex64>], target: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, ga) in gammas.iter().enumerate() {
        for (b, gb) in gammas.iter().enumerate() {
            let size = ga.nrows();
            let anti = ga * gb + gb * ga
                - DMatrix::<Complex64>::identity(size, size) * Complex64::from(target[(a, b)]);
            worst = worst.max(max_norm(&anti));
        }
    }
    worst
}

/// How the metric blocks are factored into vielbeins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VielbeinMethod {
    /// Lower-triangular Cholesky factor.
    #[default]
    Cholesky,
    /// Symmetric square root from the eigen-decomposition.
    Eigen,
}

/// Block vielbeins with `e_h e_hᵀ = g` and `e_v e_vᵀ = h`. Row `α`, column
/// `ā` holds `e^ā_α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VielbeinPoint {
    pub e_h: DMatrix<f64>,
    pub e_v: DMatrix<f64>,
}

impl VielbeinPoint {
    /// The block-diagonal vielbein `diag(e_h, e_v)`.
    pub fn full(&self) -> DMatrix<f64> {
        block_diag(&self.e_h, &self.e_v)
    }

    /// The inverse vielbein `E = e^{−T}`: column `ā` holds the components
    /// `E^α_ā` of the orthonormal frame vector in the adapted basis.
    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        Ok(linalg::checked_inverse(&self.full(), "vielbein")?.transpose())
    }

    /// `max |e eᵀ − G|` against the given blocks.
    pub fn congruence_residual(&self, g: &DMatrix<f64>, h: &DMatrix<f64>) -> f64 {
        let rh = (&self.e_h * self.e_h.transpose() - g).amax();
        let rv = (&self.e_v * self.e_v.transpose() - h).amax();
        rh.max(rv)
    }
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

/// Factors one symmetric positive-definite block.
pub fn factor_block(m: &DMatrix<f64>, method: VielbeinMethod, what: &str) -> Result<DMatrix<f64>> {
    if !m.iter().all(|x| x.is_finite()) {
        return Err(Error::Degenerate(format!("{what} has non-finite entries")));
    }
    match method {
        VielbeinMethod::Cholesky => m
            .clone()
            .cholesky()
            .map(|c| c.l())
            .ok_or_else(|| Error::Degenerate(format!("{what} is not positive definite"))),
        VielbeinMethod::Eigen => {
            let sym = (m + m.transpose()) * 0.5;
            let eig = sym.symmetric_eigen();
            if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
                return Err(Error::Degenerate(format!("{what} is not positive definite")));
            }
            let root = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
            Ok(&eig.eigenvectors * root * eig.eigenvectors.transpose())
        }
    }
}

pub fn vielbein(src: &dyn GeometrySource, u: &[f64], method: VielbeinMethod) -> Result<VielbeinPoint> {
    let geom = src.geometry(u, 0)?;
    Ok(VielbeinPoint {
        e_h: factor_block(&linalg::values(&geom.g), method, "horizontal metric block")?,
        e_v: factor_block(&linalg::values(&geom.h), method, "vertical metric block")?,
    })
}

/// Curved gammas `γ^α = E^α_ā γ^ā`, whose anticommutators reproduce
/// `2 G^{αβ} I` for the block metric.
pub fn gamma_frame(gammas: &GammaSet, v: &VielbeinPoint) -> Result<Vec<DMatrix<Complex64>>> {
    let e_inv = v.inverse()?;
    let d = e_inv.nrows();
    if d != gammas.dim {
        return Err(Error::Shape(format!(
            "vielbein of dimension {d} with {}-dimensional gammas",
            gammas.dim
        )));
    }
    Ok((0..d)
        .map(|alpha| {
            let size = gammas.size();
            let mut acc = DMatrix::<Complex64>::zeros(size, size);
            for (a, g) in gammas.matrices.iter().enumerate() {
                acc += g * Complex64::from(e_inv[(alpha, a)]);
            }
            acc
        })
        .collect())
}

/// Cholesky factor of a jet-valued block, entry by entry.
fn cholesky_jets(m: &Array2<Jet>, what: &str) -> Result<Array2<Jet>> {
    factor_block(&linalg::values(m), VielbeinMethod::Cholesky, what)?;
    let k = m.dim().0;
    let zero = Jet::zero(m[[0, 0]].nvars(), m[[0, 0]].order());
    let mut l = Array2::from_elem((k, k), zero);
    for j in 0..k {
        let mut diag = m[[j, j]].clone();
        for p in 0..j {
            diag = diag - &l[[j, p]] * &l[[j, p]];
        }
        let root = diag.sqrt()?;
        for i in j + 1..k {
            let mut off = m[[i, j]].clone();
            for p in 0..j {
                off = off - &l[[i, p]] * &l[[j, p]];
            }
            l[[i, j]] = off.div_jet(&root)?;
        }
        l[[j, j]] = root;
    }
    Ok(l)
}

/// Vielbein `e` (rows curved, columns frame) and inverse vielbein `E = e^{−T}`
/// as jets of the block metric's order.
pub fn vielbein_jets(geom: &GeometryJets) -> Result<(Array2<Jet>, Array2<Jet>)> {
    let (n, d) = (geom.shape.n, geom.shape.dim());
    let lh = cholesky_jets(&geom.g, "horizontal metric block")?;
    let lv = cholesky_jets(&geom.h, "vertical metric block")?;
    let order = lh[[0, 0]].order().min(lv[[0, 0]].order());
    let e = Array2::from_shape_fn((d, d), |(a, b)| match (a < n, b < n) {
        (true, true) => lh[[a, b]].clone(),
        (false, false) => lv[[a - n, b - n]].clone(),
        _ => Jet::zero(d, order),
    });
    let e_inv = linalg::inverse(&e, "vielbein")?.t().to_owned();
    Ok((e, e_inv))
}

/// `Γ^ā_{b̄μ} = e^ā_ρ (δ_μ E^ρ_b̄ + E^ν_b̄ Γ^ρ_{νμ})`, stored `[[ā, b̄, μ]]`.
pub fn frame_connection_jets(local: &LocalGeometry, e: &Array2<Jet>, e_inv: &Array2<Jet>) -> Array3<Jet> {
    let d = local.shape().dim();
    let de = covariant_frame_derivative(local, e_inv);
    Array3::from_shape_fn((d, d, d), |(a, b, mu)| {
        let mut acc = &e[[0, a]] * &de[[0, b, mu]];
        for rho in 1..d {
            acc = acc + &e[[rho, a]] * &de[[rho, b, mu]];
        }
        acc
    })
}

/// `(D_μ E_b̄)^ρ = δ_μ E^ρ_b̄ + E^ν_b̄ Γ^ρ_{νμ}`, stored `[[ρ, b̄, μ]]`.
fn covariant_frame_derivative(local: &LocalGeometry, e_inv: &Array2<Jet>) -> Array3<Jet> {
    let d = local.shape().dim();
    Array3::from_shape_fn((d, d, d), |(rho, b, mu)| {
        let mut acc = local.geom.delta(&e_inv[[rho, b]], mu);
        for nu in 0..d {
            acc = acc + &e_inv[[nu, b]] * &local.gamma[[rho, nu, mu]];
        }
        acc
    })
}

/// Frame connection and its spinor lift at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinConnectionPoint {
    /// `Γ^ā_{b̄μ}` stored `[[ā, b̄, μ]]`.
    pub frame: Array3<f64>,
    /// `Γ^[S]_μ`, one matrix per adapted direction `μ`.
    pub matrices: Vec<DMatrix<Complex64>>,
    /// `max |D_μ E_b̄ − Γ^ā_{b̄μ} E_ā|` in adapted components.
    pub defining_residual: f64,
}

impl SpinConnectionPoint {
    pub fn anti_hermiticity_residual(&self) -> f64 {
        self.matrices
            .iter()
            .map(|s| max_norm(&(s + s.adjoint())))
            .fold(0.0, f64::max)
    }

    /// `max |Γ_{āb̄μ} + Γ_{b̄āμ}|`, zero for metric connections.
    pub fn antisymmetry_residual(&self) -> f64 {
        let (d, _, _) = self.frame.dim();
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                for mu in 0..d {
                    worst = worst.max((self.frame[[a, b, mu]] + self.frame[[b, a, mu]]).abs());
                }
            }
        }
        worst
    }
}

/// `Γ^[S]_μ = SPIN_LIFT · Γ_{āb̄μ} γ^ā γ^b̄` from frame-connection values.
pub fn spin_matrices(frame: &Array3<f64>, gammas: &GammaSet) -> Vec<DMatrix<Complex64>> {
    let (d, _, _) = frame.dim();
    let size = gammas.size();
    (0..d)
        .map(|mu| {
            let mut acc = DMatrix::<Complex64>::zeros(size, size);
            for a in 0..d {
                for b in 0..d {
                    let w = SPIN_LIFT * frame[[a, b, mu]];
                    if w != 0.0 {
                        acc += &gammas.matrices[a] * &gammas.matrices[b] * Complex64::from(w);
                    }
                }
            }
            acc
        })
        .collect()
}

pub fn spin_connection(
    src: &dyn GeometrySource,
    sel: &ConnectionSelector,
    u: &[f64],
) -> Result<SpinConnectionPoint> {
    let local = LocalGeometry::new(src, sel, u, 1)?;
    let d = local.shape().dim();
    let gammas = GammaSet::new(d)?;
    let (e, e_inv) = vielbein_jets(&local.geom)?;
    let frame_j = frame_connection_jets(&local, &e, &e_inv);
    let frame = frame_j.mapv(|j| j.value());
    let de = covariant_frame_derivative(&local, &e_inv).mapv(|j| j.value());
    let e_inv_v = e_inv.mapv(|j| j.value());
    let mut residual: f64 = 0.0;
    for rho in 0..d {
        for b in 0..d {
            for mu in 0..d {
                let rebuilt: f64 = (0..d).map(|a| frame[[a, b, mu]] * e_inv_v[[rho, a]]).sum();
                residual = residual.max((de[[rho, b, mu]] - rebuilt).abs());
            }
        }
    }
    Ok(SpinConnectionPoint {
        matrices: spin_matrices(&frame, &gammas),
        frame,
        defining_residual: residual,
    })
}

/// A complex-valued jet stored as a pair of real jets.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexJet {
    pub re: Jet,
    pub im: Jet,
}

impl ComplexJet {
    pub fn new(re: Jet, im: Jet) -> Self {
        ComplexJet { re, im }
    }

    pub fn zero(nvars: usize, order: usize) -> Self {
        ComplexJet::new(Jet::zero(nvars, order), Jet::zero(nvars, order))
    }

    /// `c · f` for a real jet `f`.
    pub fn from_real(f: &Jet, c: Complex64) -> Self {
        ComplexJet::new(f.scale(c.re), f.scale(c.im))
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }

    pub fn order(&self) -> usize {
        self.re.order().min(self.im.order())
    }

    pub fn scale(&self, c: Complex64) -> Self {
        ComplexJet::new(
            self.re.scale(c.re) - self.im.scale(c.im),
            self.re.scale(c.im) + self.im.scale(c.re),
        )
    }

    pub fn map(&self, f: impl Fn(&Jet) -> Jet) -> Self {
        ComplexJet::new(f(&self.re), f(&self.im))
    }
}

impl Add<&ComplexJet> for &ComplexJet {
    type Output = ComplexJet;
    fn add(self, rhs: &ComplexJet) -> ComplexJet {
        ComplexJet::new(&self.re + &rhs.re, &self.im + &rhs.im)
    }
}

impl Sub<&ComplexJet> for &ComplexJet {
    type Output = ComplexJet;
    fn sub(self, rhs: &ComplexJet) -> ComplexJet {
        ComplexJet::new(&self.re - &rhs.re, &self.im - &rhs.im)
    }
}

impl Mul<&ComplexJet> for &ComplexJet {
    type Output = ComplexJet;
    fn mul(self, rhs: &ComplexJet) -> ComplexJet {
        ComplexJet::new(
            &self.re * &rhs.re - &self.im * &rhs.im,
            &self.re * &rhs.im + &self.im * &rhs.re,
        )
    }
}

/// A spinor field given by `(real, imaginary)` scalar fields per component.
#[derive(Debug, Clone)]
pub struct SpinorField {
    pub components: Vec<(ScalarField, ScalarField)>,
}

impl SpinorField {
    pub fn new(components: Vec<(ScalarField, ScalarField)>) -> Self {
        SpinorField { components }
    }

    pub fn jets(&self, u: &[f64], order: usize) -> Result<Vec<ComplexJet>> {
        let coords = Jet::seed(u, order);
        self.components
            .iter()
            .map(|(re, im)| Ok(ComplexJet::new(re.eval_on(&coords)?, im.eval_on(&coords)?)))
            .collect()
    }
}

/// The Dirac d-operator `γ^α (δ_α + Γ^[S]_α)` assembled from jets at one
/// point, so it can be applied to spinor jets and applied again.
#[derive(Debug, Clone)]
pub struct DiracOperator {
    geom: GeometryJets,
    /// `gamma[α][(s, t)]`: components of `γ^α`.
    gamma: Vec<Array2<ComplexJet>>,
    /// `spin[α][(s, t)]`: components of `Γ^[S]_α`.
    spin: Vec<Array2<ComplexJet>>,
    size: usize,
}

impl DiracOperator {
    /// Builds the operator with metric jets of the given order; the operator
    /// can then be applied `order` times.
    pub fn new(
        src: &dyn GeometrySource,
        sel: &ConnectionSelector,
        u: &[f64],
        order: usize,
    ) -> Result<Self> {
        let local = LocalGeometry::new(src, sel, u, order.max(1))?;
        let d = local.shape().dim();
        let gammas = GammaSet::new(d)?;
        let size = gammas.size();
        let (e, e_inv) = vielbein_jets(&local.geom)?;
        let frame = frame_connection_jets(&local, &e, &e_inv);
        let gamma = (0..d)
            .map(|alpha| {
                Array2::from_shape_fn((size, size), |(s, t)| {
                    let mut acc = ComplexJet::zero(d, e_inv[[0, 0]].order());
                    for (a, g) in gammas.matrices.iter().enumerate() {
                        acc = &acc + &ComplexJet::from_real(&e_inv[[alpha, a]], g[(s, t)]);
                    }
                    acc
                })
            })
            .collect();
        let bilinears: Vec<Vec<DMatrix<Complex64>>> = gammas
            .matrices
            .iter()
            .map(|ga| gammas.matrices.iter().map(|gb| ga * gb).collect())
            .collect();
        let spin = (0..d)
            .map(|mu| {
                Array2::from_shape_fn((size, size), |(s, t)| {
                    let mut acc = ComplexJet::zero(d, frame[[0, 0, 0]].order());
                    for a in 0..d {
                        for b in 0..d {
                            let c = bilinears[a][b][(s, t)] * SPIN_LIFT;
                            if c != C0 {
                                acc = &acc + &ComplexJet::from_real(&frame[[a, b, mu]], c);
                            }
                        }
                    }
                    acc
                })
            })
            .collect();
        Ok(DiracOperator {
            geom: local.geom,
            gamma,
            spin,
            size,
        })
    }

    pub fn spinor_size(&self) -> usize {
        self.size
    }

    /// `(Dψ)_s = γ^α_{st} (δ_α ψ_t + Γ^[S]_{α,tu} ψ_u)`, one order below `ψ`.
    pub fn apply(&self, psi: &[ComplexJet]) -> Result<Vec<ComplexJet>> {
        if psi.len() != self.size {
            return Err(Error::Shape(format!(
                "spinor with {} components, expected {}",
                psi.len(),
                self.size
            )));
        }
        let order = psi.iter().map(ComplexJet::order).min().unwrap_or(0);
        if order == 0 {
            return Err(Error::Invalid("the Dirac operator needs spinor jets of order ≥ 1".into()));
        }
        let d = self.geom.shape.dim();
        let covariant: Vec<Vec<ComplexJet>> = (0..d)
            .map(|alpha| {
                (0..self.size)
                    .map(|t| {
                        let mut acc = psi[t].map(|f| self.geom.delta(f, alpha));
                        for (u, p) in psi.iter().enumerate() {
                            acc = &acc + &(&self.spin[alpha][(t, u)] * p);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        Ok((0..self.size)
            .map(|s| {
                let mut acc = ComplexJet::zero(d, order - 1);
                for (alpha, row) in covariant.iter().enumerate() {
                    for (t, c) in row.iter().enumerate() {
                        acc = &acc + &(&self.gamma[alpha][(s, t)] * c);
                    }
                }
                acc
            })
            .collect())
    }
}

/// `(Dψ)(u)` for a spinor field.
pub fn dirac_apply(
    psi: &SpinorField,
    src: &dyn GeometrySource,
    sel: &ConnectionSelector,
    u: &[f64],
) -> Result<Vec<Complex64>> {
    let op = DiracOperator::new(src, sel, u, 1)?;
    let out = op.apply(&psi.jets(u, 1)?)?;
    Ok(out.iter().map(ComplexJet::value).collect())
}

/// `(D²ψ)(u)` by nested jets.
pub fn dirac_squared(
    psi: &SpinorField,
    src: &dyn GeometrySource,
    sel: &ConnectionSelector,
    u: &[f64],
) -> Result<Vec<Complex64>> {
    let op = DiracOperator::new(src, sel, u, 2)?;
    let once = op.apply(&psi.jets(u, 2)?)?;
    let twice = op.apply(&once)?;
    Ok(twice.iter().map(ComplexJet::value).collect())
}

/// Pointwise heat-kernel densities and the curvature scalars they use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensities {
    pub a0: f64,
    pub a2: f64,
    /// Absent when the geometry cannot deliver the fourth-order jets needed
    /// for `D_μ D^μ R`.
    pub a4: Option<f64>,
    /// Lichnerowicz endomorphism `E = R/4`.
    pub e: f64,
    pub scalar: f64,
    pub ricci_sq: f64,
    pub riemann_sq: f64,
    pub laplacian_scalar: Option<f64>,
    /// `tr I = 2^⌊d/2⌋`.
    pub trace_identity: f64,
}

/// Curvature scalars feeding `a4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureScalars {
    pub scalar: f64,
    pub ricci_sq: f64,
    pub riemann_sq: f64,
    pub laplacian_scalar: f64,
}

/// Curvature multiplying `E` in the `−60 R E` term of `a4`. The scalar
/// curvature is used; swap this for another choice in one place.
pub const RE_TERM_CURVATURE: fn(&CurvatureScalars) -> f64 = |c| c.scalar;

/// `(4π)^{−d/2}`.
pub fn heat_prefactor(dim: usize) -> f64 {
    (4.0 * PI).powf(-(dim as f64) / 2.0)
}

/// `a4 / ((4π)^{−d/2} tr I)`, the bracket of the displayed combination.
pub fn a4_bracket(c: &CurvatureScalars) -> f64 {
    let e = c.scalar / 4.0;
    let lap_e = c.laplacian_scalar / 4.0;
    (-12.0 * c.laplacian_scalar + 5.0 * c.scalar * c.scalar
        - 2.0 * c.ricci_sq
        - 1.75 * c.riemann_sq
        - 60.0 * RE_TERM_CURVATURE(c) * e
        + 180.0 * e * e
        + 60.0 * lap_e)
        / 360.0
}

pub fn seeley_densities(
    src: &dyn GeometrySource,
    sel: &ConnectionSelector,
    cutoff: f64,
    u: &[f64],
) -> Result<SpectralDensities> {
    let order = src.max_order().min(4);
    if order < 2 {
        return Err(Error::Invalid(
            "spectral densities need metric jets of order ≥ 2".into(),
        ));
    }
    let local = LocalGeometry::new(src, sel, u, order)?;
    let shape = local.shape();
    let d = shape.dim();
    let riemann = local.curvature()?;
    let ricci = ricci_jets(&riemann);
    let scalar_j = scalar_jet(&local.geom, &ricci)?;

    let metric = linalg::values(&local.geom.block_metric());
    let inv = linalg::checked_inverse(&metric, "block metric")?;
    let ric = ricci.mapv(|j| j.value());
    let riem = riemann.mapv(|j| j.value());
    let ricci_sq = contract_ricci(&ric, &inv);
    let riemann_sq = contract_riemann(&riem, &metric, &inv);
    let laplacian_scalar = if order >= 4 {
        Some(scalar_laplacian(&local, &scalar_j, &inv))
    } else {
        None
    };

    let scalar = scalar_j.value();
    let trace = GammaSet::new(d)?.size() as f64;
    let pre = heat_prefactor(d) * trace;
    let e = scalar / 4.0;
    let a4 = laplacian_scalar.map(|lap| {
        pre * a4_bracket(&CurvatureScalars {
            scalar,
            ricci_sq,
            riemann_sq,
            laplacian_scalar: lap,
        })
    });
    Ok(SpectralDensities {
        a0: cutoff.powi(4) * pre,
        a2: cutoff.powi(2) * pre * (-scalar / 6.0 + e),
        a4,
        e,
        scalar,
        ricci_sq,
        riemann_sq,
        laplacian_scalar,
        trace_identity: trace,
    })
}

/// `R_{μν} R^{μν}` with indices raised by `inv`.
fn contract_ricci(ric: &Array2<f64>, inv: &DMatrix<f64>) -> f64 {
    let d = inv.nrows();
    let r = DMatrix::from_fn(d, d, |i, j| ric[[i, j]]);
    let raised = inv * &r * inv;
    raised.component_mul(&r).sum()
}

/// `R_{μνab} R^{μνab}` from `R^α_{βγτ}`.
fn contract_riemann(r: &ndarray::Array4<f64>, metric: &DMatrix<f64>, inv: &DMatrix<f64>) -> f64 {
    let d = inv.nrows();
    let mut total = 0.0;
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                for t in 0..d {
                    let x = r[[a, b, c, t]];
                    if x == 0.0 {
                        continue;
                    }
                    // R^{α'}{}_{β'γ'τ'} with the first index lowered and the rest raised.
                    let mut y = 0.0;
                    for a2 in 0..d {
                        for b2 in 0..d {
                            for c2 in 0..d {
                                for t2 in 0..d {
                                    let w = metric[(a, a2)] * inv[(b, b2)] * inv[(c, c2)] * inv[(t, t2)];
                                    if w != 0.0 {
                                        y += w * r[[a2, b2, c2, t2]];
                                    }
                                }
                            }
                        }
                    }
                    total += x * y;
                }
            }
        }
    }
    total
}

/// `G^{μν} (δ_μ δ_ν R − Γ^λ_{νμ} δ_λ R)`.
fn scalar_laplacian(local: &LocalGeometry, scalar: &Jet, inv: &DMatrix<f64>) -> f64 {
    let d = local.shape().dim();
    let first: Vec<Jet> = (0..d).map(|l| local.geom.delta(scalar, l)).collect();
    let mut total = 0.0;
    for mu in 0..d {
        for nu in 0..d {
            let w = inv[(mu, nu)];
            if w == 0.0 {
                continue;
            }
            let mut hess = local.geom.delta(&first[nu], mu).value();
            for (l, f) in first.iter().enumerate() {
                hess -= local.gamma[[l, nu, mu]].value() * f.value();
            }
            total += w * hess;
        }
    }
    total
}

/// Moments `f0 = ∫ χ z dz` and `f2 = ∫ χ dz` of a cutoff function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffMoments {
    pub f0: f64,
    pub f2: f64,
}

/// Cutoff `χ̃(z) = χ(z) − α χ(β z)` built on the characteristic function of
/// `[0, 1]`; `α = 0` gives the plain cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff {
            alpha: 0.0,
            beta: 1.0,
        }
    }
}

impl Cutoff {
    pub fn characteristic() -> Self {
        Cutoff::default()
    }

    /// The cosmological-term cancelling choice `α = β²`.
    pub fn cancelling(beta: f64) -> Self {
        Cutoff {
            alpha: beta * beta,
            beta,
        }
    }

    /// Closed-form moments: `∫ χ(βz) z dz = β^{−2}/2` and `∫ χ(βz) dz = β^{−1}`.
    pub fn moments(&self) -> Result<CutoffMoments> {
        if !(self.beta > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Invalid(format!(
                "cutoff needs β > 0 and finite α, got α = {}, β = {}",
                self.alpha, self.beta
            )));
        }
        let (a, b) = (self.alpha, self.beta);
        Ok(CutoffMoments {
            f0: 0.5 - a * 0.5 / (b * b),
            f2: 1.0 - a / b,
        })
    }
}

/// Quadrature nodes and weights over a chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// Multiply each weight by `√(det g det h)` at its node.
    #[serde(default)]
    pub volume_form: bool,
}

/// Truncated spectral action `f0 Λ⁴ c4 + f2 Λ² c2` with its pieces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralAction {
    pub moments: CutoffMoments,
    /// `Σ w (4π)^{−d/2} tr I`, the integrated `a0 / Λ⁴`.
    pub a0_integral: f64,
    /// `Σ w (4π)^{−d/2} (R/12) tr I`, the integrated `a2 / Λ²`.
    pub a2_integral: f64,
    /// `f0 · a0_integral`.
    pub lambda4_coefficient: f64,
    /// `f2 · a2_integral`.
    pub lambda2_coefficient: f64,
    pub lambda4_term: f64,
    pub lambda2_term: f64,
    pub total: f64,
}

/// `√(det g · det h)` at `u`.
pub fn volume_element(src: &dyn GeometrySource, u: &[f64]) -> Result<f64> {
    let geom = src.geometry(u, 0)?;
    let det = linalg::values(&geom.g).determinant() * linalg::values(&geom.h).determinant();
    if det <= 0.0 {
        return Err(Error::Degenerate(format!("metric determinant {det:e} is not positive")));
    }
    Ok(det.sqrt())
}

/// Pairwise sum in a fixed order, independent of thread scheduling.
fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}

pub fn spectral_action(
    src: &dyn GeometrySource,
    sel: &ConnectionSelector,
    cutoff_scale: f64,
    cutoff: Cutoff,
    grid: &SpectralGrid,
) -> Result<SpectralAction> {
    if grid.points.is_empty() {
        return Err(Error::Invalid("spectral action over an empty grid".into()));
    }
    if grid.points.len() != grid.weights.len() {
        return Err(Error::Shape(format!(
            "{} grid points with {} weights",
            grid.points.len(),
            grid.weights.len()
        )));
    }
    let moments = cutoff.moments()?;
    let per_point: Vec<(f64, f64)> = grid
        .points
        .par_iter()
        .zip(grid.weights.par_iter())
        .map(|(u, &w)| {
            let dens = seeley_densities(src, sel, 1.0, u)?;
            let w = if grid.volume_form { w * volume_element(src, u)? } else { w };
            Ok((w * dens.a0, w * dens.a2))
        })
        .collect::<Result<_>>()?;
    let a0: Vec<f64> = per_point.iter().map(|p| p.0).collect();
    let a2: Vec<f64> = per_point.iter().map(|p| p.1).collect();
    let (a0_integral, a2_integral) = (pairwise_sum(&a0), pairwise_sum(&a2));
    let lambda4_coefficient = moments.f0 * a0_integral;
    let lambda2_coefficient = moments.f2 * a2_integral;
    let lambda4_term = lambda4_coefficient * cutoff_scale.powi(4);
    let lambda2_term = lambda2_coefficient * cutoff_scale.powi(2);
    Ok(SpectralAction {
        moments,
        a0_integral,
        a2_integral,
        lambda4_coefficient,
        lambda2_coefficient,
        lambda4_term,
        lambda2_term,
        total: lambda4_term + lambda2_term,
    })
}

/// Spinor size `2^⌊d/2⌋` for a bundle shape.
pub fn spinor_size(shape: BundleShape) -> usize {
    1 << (shape.dim() / 2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::dsl::parse_field;

    #[test]
    fn clifford_in_all_dimensions() {
        for d in 1..=6 {
            let g = GammaSet::new(d).unwrap();
            assert_eq!(g.matrices.len(), d);
            assert_eq!(g.matrices[0].nrows(), 1 << (d / 2));
            assert!(g.clifford_residual() < 1e-12, "d = {d}");
            assert!(g.hermiticity_residual() < 1e-12, "d = {d}");
        }
        assert!(GammaSet::new(7).is_err());
    }

    #[test]
    fn two_dimensional_gammas_are_pauli() {
        let g = GammaSet::new(2).unwrap();
        let [s1, s2, _] = pauli();
        assert_eq!(g.matrices, vec![s1, s2]);
    }

    #[test]
    fn diagonal_vielbein() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 9.0]));
        for method in [VielbeinMethod::Cholesky, VielbeinMethod::Eigen] {
            let e = factor_block(&m, method, "test").unwrap();
            assert!((e - DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 3.0]))).amax() < 1e-14);
        }
        assert!(factor_block(&(-m), VielbeinMethod::Cholesky, "test").is_err());
    }

    #[test]
    fn curved_gammas_reproduce_inverse_metric() {
        let geo = catalog::builtin("anisotropic").unwrap();
        let u = [0.3, -0.4, 0.8, 1.1];
        for method in [VielbeinMethod::Cholesky, VielbeinMethod::Eigen] {
            let v = vielbein(&geo, &u, method).unwrap();
            let gammas = gamma_frame(&GammaSet::new(4).unwrap(), &v).unwrap();
            let geom = geo.geometry(&u, 0).unwrap();
            let inv = linalg::values(&geom.block_metric()).try_inverse().unwrap();
            assert!(anticommutator_residual(&gammas, &(inv * 2.0)) < 1e-12);
            assert!(v.congruence_residual(&linalg::values(&geom.g), &linalg::values(&geom.h)) < 1e-12);
        }
    }

    #[test]
    fn flat_spin_connection_vanishes() {
        let geo = catalog::builtin("flat").unwrap();
        let sc = spin_connection(&geo, &ConnectionSelector::Canonical, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!(sc.frame.iter().all(|x| x.abs() < 1e-15));
        assert!(sc.matrices.iter().all(|m| max_norm(m) < 1e-15));
    }

    #[test]
    fn sphere_frame_connection_is_classical() {
        // Latitude chart: E_1 = ∂_θ / r, E_2 = ∂_φ / (r cos θ). The only
        // nonzero components are Γ^1_{2φ} = −Γ^2_{1φ} = sin θ.
        let r = 1.7;
        let geo = catalog::builtin(&format!("sphere2xflat:{r}")).unwrap();
        let theta: f64 = 0.35;
        let u = [theta, 0.2, 0.5, -0.3];
        let sc = spin_connection(&geo, &ConnectionSelector::Canonical, &u).unwrap();
        assert!((sc.frame[[0, 1, 1]] - theta.sin()).abs() < 1e-12);
        assert!((sc.frame[[1, 0, 1]] + theta.sin()).abs() < 1e-12);
        let total: f64 = sc.frame.iter().map(|x| x.abs()).sum();
        assert!((total - 2.0 * theta.sin()).abs() < 1e-12);
        assert!(sc.anti_hermiticity_residual() < 1e-12);
    }

    #[test]
    fn plane_wave_dirac() {
        // ψ = ψ0 e^{i k·u} gives D ψ = i (γ^a k_a) ψ.
        let geo = catalog::builtin("flat").unwrap();
        let shape = BundleShape::new(2, 2).unwrap();
        let k = [0.7, -1.1, 0.4, 0.9];
        let psi0 = [
            Complex64::new(1.0, 0.5),
            Complex64::new(-0.3, 0.2),
            Complex64::new(0.0, -0.8),
            Complex64::new(0.6, 0.0),
        ];
        let phase = "0.7*x1 - 1.1*x2 + 0.4*y1 + 0.9*y2";
        let comps = psi0
            .iter()
            .map(|c| {
                let re = format!("{}*cos({phase}) - {}*sin({phase})", c.re, c.im);
                let im = format!("{}*sin({phase}) + {}*cos({phase})", c.re, c.im);
                (parse_field(&re, shape).unwrap(), parse_field(&im, shape).unwrap())
            })
            .collect();
        let psi = SpinorField::new(comps);
        let u = [0.2, -0.1, 0.5, 0.3];
        let out = dirac_apply(&psi, &geo, &ConnectionSelector::Canonical, &u).unwrap();
        let kx: f64 = k.iter().zip(u).map(|(a, b)| a * b).sum();
        let wave = Complex64::new(0.0, kx).exp();
        let gammas = GammaSet::new(4).unwrap();
        let mut slash = DMatrix::<Complex64>::zeros(4, 4);
        for (a, g) in gammas.matrices.iter().enumerate() {
            slash += g * Complex64::from(k[a]);
        }
        let expected = slash * nalgebra::DVector::from_row_slice(&psi0) * (CI * wave);
        for s in 0..4 {
            assert!((out[s] - expected[s]).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_spinor_is_harmonic_in_flat_space() {
        let geo = catalog::builtin("flat").unwrap();
        let shape = BundleShape::new(2, 2).unwrap();
        let c = |v: f64| ScalarField::constant(v, shape);
        let psi = SpinorField::new((0..4).map(|i| (c(i as f64), c(1.0))).collect());
        let out = dirac_apply(&psi, &geo, &ConnectionSelector::Canonical, &[0.0; 4]).unwrap();
        assert!(out.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn flat_and_sphere_densities() {
        let sel = ConnectionSelector::Canonical;
        let flat = catalog::builtin("flat").unwrap();
        let lam = 3.0;
        let dens = seeley_densities(&flat, &sel, lam, &[0.1, 0.2, 0.3, 0.4]).unwrap();
        let pre = (4.0 * PI).powi(-2);
        assert!((dens.a0 - lam.powi(4) * pre * 4.0).abs() < 1e-12);
        assert_eq!(dens.a2, 0.0);
        assert_eq!(dens.a4, Some(0.0));

        // Round sphere: R = 2/r², Ric² = 2/r⁴, Riem² = 4/r⁴, ΔR = 0.
        let r: f64 = 1.3;
        let sphere = catalog::builtin(&format!("sphere2xflat:{r}")).unwrap();
        let dens = seeley_densities(&sphere, &sel, lam, &[0.4, -0.2, 0.7, 0.1]).unwrap();
        let rs = 2.0 / (r * r);
        assert!((dens.scalar - rs).abs() < 1e-10);
        assert!((dens.a2 - lam * lam * pre * rs / 12.0 * 4.0).abs() < 1e-10);
        let classical = CurvatureScalars {
            scalar: rs,
            ricci_sq: 2.0 / r.powi(4),
            riemann_sq: 4.0 / r.powi(4),
            laplacian_scalar: 0.0,
        };
        assert!((dens.ricci_sq - classical.ricci_sq).abs() < 1e-9);
        assert!((dens.riemann_sq - classical.riemann_sq).abs() < 1e-9);
        assert!((dens.a4.unwrap() - pre * 4.0 * a4_bracket(&classical)).abs() < 1e-9);
    }

    #[test]
    fn cutoff_moments() {
        let m = Cutoff::characteristic().moments().unwrap();
        assert_eq!((m.f0, m.f2), (0.5, 1.0));
        assert_eq!(Cutoff::cancelling(2.0).moments().unwrap().f0, 0.0);
        assert!(Cutoff { alpha: 1.0, beta: 0.0 }.moments().is_err());
    }

    #[test]
    fn flat_action_is_half_a0_volume() {
        let flat = catalog::builtin("flat").unwrap();
        let grid = SpectralGrid {
            points: vec![vec![0.1, 0.2, 0.3, 0.4], vec![-0.5, 0.5, 1.0, -1.0]],
            weights: vec![0.25, 0.75],
            volume_form: true,
        };
        let lam = 2.0;
        let act = spectral_action(&flat, &ConnectionSelector::Canonical, lam, Cutoff::characteristic(), &grid).unwrap();
        let a0 = lam.powi(4) * (4.0 * PI).powi(-2) * 4.0;
        assert!((act.total - 0.5 * a0).abs() < 1e-12);
        let empty = SpectralGrid { points: vec![], weights: vec![], volume_form: false };
        assert!(spectral_action(&flat, &ConnectionSelector::Canonical, lam, Cutoff::characteristic(), &empty).is_err());
    }
}
