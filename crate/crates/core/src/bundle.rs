//! Nonlinear-connection geometry on a bundle chart `u = (x^i, y^a)`.
//!
//! Arrays are indexed `(upper, lower-left, lower-right)` throughout. The
//! N-connection coefficients `N_i^a` are stored as an `m × n` array `n[[a, i]]`.
//! The adapted frame is `δ_i = ∂_i − N_i^a ∂_a`, `δ_a = ∂_a`, with dual
//! co-frame `dx^i`, `δy^a = dy^a + N_i^a dx^i`. The anholonomy coefficients
//! are pinned by `[δ_α, δ_β] = W^γ_{αβ} δ_γ`, which gives `W^a_{ij} = Ω^a_{ij}`
//! and `W^a_{ib} = ∂_b N_i^a = −W^a_{bi}`.

use nalgebra::DMatrix;
use ndarray::{Array2, Array3};

use crate::dsl::{BundleShape, ScalarField};
use crate::error::{Error, Result};
use crate::jet::{Jet, MAX_ORDER};
use crate::linalg;

/// Symmetric matrix of scalar fields; only the upper triangle is stored.
#[derive(Debug, Clone)]
pub struct SymmetricFields {
    dim: usize,
    upper: Vec<ScalarField>,
}

impl SymmetricFields {
    /// Builds from a full square array, rejecting asymmetric sources.
    pub fn from_rows(rows: Vec<Vec<ScalarField>>) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Shape("metric block is not square".into()));
        }
        let mut upper = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in i..dim {
                if i != j && rows[i][j].expr() != rows[j][i].expr() {
                    return Err(Error::Invalid(format!(
                        "metric block is not symmetric at ({}, {}): `{}` vs `{}`",
                        i + 1,
                        j + 1,
                        rows[i][j].source(),
                        rows[j][i].source()
                    )));
                }
                upper.push(rows[i][j].clone());
            }
        }
        Ok(SymmetricFields { dim, upper })
    }

    /// Builds from the upper triangle listed row by row.
    pub fn from_upper(dim: usize, upper: Vec<ScalarField>) -> Result<Self> {
        if upper.len() != dim * (dim + 1) / 2 {
            return Err(Error::Shape(format!(
                "{} entries given for the upper triangle of a {dim}×{dim} block",
                upper.len()
            )));
        }
        Ok(SymmetricFields { dim, upper })
    }

    pub fn diagonal(entries: Vec<ScalarField>) -> Self {
        let dim = entries.len();
        let shape = entries[0].shape();
        let mut upper = Vec::with_capacity(dim * (dim + 1) / 2);
        for (i, e) in entries.iter().enumerate() {
            upper.push(e.clone());
            for _ in i + 1..dim {
                upper.push(ScalarField::zero(shape));
            }
        }
        SymmetricFields { dim, upper }
    }

    pub fn identity(dim: usize, shape: BundleShape) -> Self {
        Self::diagonal(vec![ScalarField::constant(1.0, shape); dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> &ScalarField {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        &self.upper[i * self.dim - i * (i + 1) / 2 + j]
    }

    fn jets(&self, coords: &[Jet]) -> Result<Array2<Jet>> {
        let mut upper = Vec::with_capacity(self.upper.len());
        for f in &self.upper {
            upper.push(f.eval_on(coords)?);
        }
        let dim = self.dim;
        Ok(Array2::from_shape_fn((dim, dim), |(i, j)| {
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            upper[i * dim - i * (i + 1) / 2 + j].clone()
        }))
    }
}

/// The d-metric blocks `g_ij(x, y)` and `h_ab(x, y)`.
#[derive(Debug, Clone)]
pub struct DMetricField {
    pub shape: BundleShape,
    pub g: SymmetricFields,
    pub h: SymmetricFields,
}

impl DMetricField {
    pub fn new(shape: BundleShape, g: SymmetricFields, h: SymmetricFields) -> Result<Self> {
        if g.dim() != shape.n || h.dim() != shape.m {
            return Err(Error::Shape(format!(
                "metric blocks {}×{} and {}×{} do not fit shape {shape}",
                g.dim(),
                g.dim(),
                h.dim(),
                h.dim()
            )));
        }
        Ok(DMetricField { shape, g, h })
    }
}

/// N-connection coefficients `N_i^a(x, y)`.
#[derive(Debug, Clone)]
pub struct NConnectionField {
    pub shape: BundleShape,
    coeffs: Vec<ScalarField>,
}

impl NConnectionField {
    /// `rows[a][i]` holds `N_i^a`.
    pub fn new(shape: BundleShape, rows: Vec<Vec<ScalarField>>) -> Result<Self> {
        if rows.len() != shape.m || rows.iter().any(|r| r.len() != shape.n) {
            return Err(Error::Shape(format!(
                "N-connection must be an m×n = {}×{} array",
                shape.m, shape.n
            )));
        }
        Ok(NConnectionField {
            shape,
            coeffs: rows.into_iter().flatten().collect(),
        })
    }

    pub fn zero(shape: BundleShape) -> Self {
        NConnectionField {
            shape,
            coeffs: vec![ScalarField::zero(shape); shape.n * shape.m],
        }
    }

    /// The field `N_i^a`.
    pub fn get(&self, a: usize, i: usize) -> &ScalarField {
        &self.coeffs[a * self.shape.n + i]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(ScalarField::is_zero)
    }

    pub fn jets_on(&self, coords: &[Jet]) -> Result<Array2<Jet>> {
        let (n, m) = (self.shape.n, self.shape.m);
        let mut out = Vec::with_capacity(n * m);
        for f in &self.coeffs {
            out.push(f.eval_on(coords)?);
        }
        Ok(Array2::from_shape_vec((m, n), out).expect("m×n coefficients"))
    }

    pub fn jets(&self, u: &[f64], order: usize) -> Result<Array2<Jet>> {
        check_order(order)?;
        self.jets_on(&Jet::seed(u, order))
    }
}

/// A metric plus N-connection given by scalar fields.
#[derive(Debug, Clone)]
pub struct BundleField {
    pub metric: DMetricField,
    pub nconn: NConnectionField,
}

impl BundleField {
    pub fn new(metric: DMetricField, nconn: NConnectionField) -> Result<Self> {
        if metric.shape != nconn.shape {
            return Err(Error::Shape(format!(
                "metric on {} but N-connection on {}",
                metric.shape, nconn.shape
            )));
        }
        Ok(BundleField { metric, nconn })
    }

    pub fn shape(&self) -> BundleShape {
        self.metric.shape
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > MAX_ORDER {
        Err(Error::OrderOverflow {
            requested: order,
            max: MAX_ORDER,
        })
    } else {
        Ok(())
    }
}

/// Jets of the metric blocks and N-coefficients at one point.
#[derive(Debug, Clone)]
pub struct GeometryJets {
    pub shape: BundleShape,
    pub g: Array2<Jet>,
    pub h: Array2<Jet>,
    /// `n[[a, i]] = N_i^a`.
    pub n: Array2<Jet>,
}

/// Anything that can produce metric and N-connection jets at a point.
pub trait GeometrySource: Send + Sync {
    fn shape(&self) -> BundleShape;

    /// Highest jet order [`GeometrySource::geometry`] can deliver.
    fn max_order(&self) -> usize {
        MAX_ORDER
    }

    fn geometry(&self, u: &[f64], order: usize) -> Result<GeometryJets>;
}

impl GeometrySource for BundleField {
    fn shape(&self) -> BundleShape {
        self.shape()
    }

    fn geometry(&self, u: &[f64], order: usize) -> Result<GeometryJets> {
        check_order(order)?;
        let shape = self.shape();
        if u.len() != shape.dim() {
            return Err(Error::Shape(format!(
                "point of length {} on a chart of dimension {}",
                u.len(),
                shape.dim()
            )));
        }
        let coords = Jet::seed(u, order);
        Ok(GeometryJets {
            shape,
            g: self.metric.g.jets(&coords)?,
            h: self.metric.h.jets(&coords)?,
            n: self.nconn.jets_on(&coords)?,
        })
    }
}

impl GeometryJets {
    pub fn order(&self) -> usize {
        self.g
            .iter()
            .chain(self.h.iter())
            .chain(self.n.iter())
            .map(Jet::order)
            .min()
            .unwrap_or(0)
    }

    pub fn nvars(&self) -> usize {
        self.shape.dim()
    }

    pub fn zero(&self, order: usize) -> Jet {
        Jet::zero(self.nvars(), order)
    }

    /// Adapted derivative `δ_α f`: `∂_i f − N_i^a ∂_a f` for base indices and
    /// `∂_a f` for fiber indices.
    pub fn delta(&self, f: &Jet, alpha: usize) -> Jet {
        adapted_derivative(self.shape, &self.n, f, alpha)
    }

    /// The block-diagonal metric `diag(g, h)` in the adapted basis.
    pub fn block_metric(&self) -> Array2<Jet> {
        let (n, d) = (self.shape.n, self.shape.dim());
        let order = self.g[[0, 0]].order().min(self.h[[0, 0]].order());
        Array2::from_shape_fn((d, d), |(a, b)| match (a < n, b < n) {
            (true, true) => self.g[[a, b]].clone(),
            (false, false) => self.h[[a - n, b - n]].clone(),
            _ => Jet::zero(d, order),
        })
    }

    /// Frame matrix `e` whose column `α` holds the coordinate components of
    /// `δ_α`, and its inverse whose rows are the co-frame `(dx^i, δy^a)`.
    pub fn frame(&self) -> (Array2<Jet>, Array2<Jet>) {
        frame_matrices(self.shape, &self.n)
    }

    pub fn anholonomy(&self) -> Array3<Jet> {
        anholonomy_jets(self.shape, &self.n)
    }

    pub fn n_curvature(&self) -> Array3<Jet> {
        n_curvature_jets(self.shape, &self.n)
    }

    /// The coordinate-basis metric `e_invᵀ diag(g, h) e_inv`.
    pub fn offdiagonal_metric(&self) -> Array2<Jet> {
        let (_, e_inv) = self.frame();
        let block = self.block_metric();
        let t = e_inv.t().to_owned();
        linalg::matmul(&linalg::matmul(&t, &block), &e_inv)
    }
}

/// `δ_α f` for N-coefficient jets `n[[a, i]]`.
pub fn adapted_derivative(shape: BundleShape, n: &Array2<Jet>, f: &Jet, alpha: usize) -> Jet {
    let mut out = f.partial(alpha);
    if alpha < shape.n {
        for a in 0..shape.m {
            out = out - &n[[a, alpha]] * &f.partial(shape.fiber(a));
        }
    }
    out
}

pub fn frame_matrices(shape: BundleShape, n: &Array2<Jet>) -> (Array2<Jet>, Array2<Jet>) {
    let d = shape.dim();
    let order = n.iter().map(Jet::order).min().unwrap_or(0);
    let build = |sign: f64| {
        Array2::from_shape_fn((d, d), |(r, c)| {
            if r == c {
                Jet::constant(d, order, 1.0)
            } else if r >= shape.n && c < shape.n {
                n[[r - shape.n, c]].scale(sign)
            } else {
                Jet::zero(d, order)
            }
        })
    };
    (build(-1.0), build(1.0))
}

/// Anholonomy coefficients computed from the frame commutator:
/// `[δ_α, δ_β] = (δ_α e^μ_β − δ_β e^μ_α) ∂_μ`, then mapped back through the
/// co-frame.
pub fn anholonomy_jets(shape: BundleShape, n: &Array2<Jet>) -> Array3<Jet> {
    let d = shape.dim();
    let (e, e_inv) = frame_matrices(shape, n);
    let order = e[[0, 0]].order().saturating_sub(1);
    let apply = |field: &Jet, alpha: usize| -> Jet {
        let mut acc = Jet::zero(d, order);
        for nu in 0..d {
            acc = acc + &e[[nu, alpha]] * &field.partial(nu);
        }
        acc
    };
    let mut bracket = Array3::from_elem((d, d, d), Jet::zero(d, order));
    for alpha in 0..d {
        for beta in 0..d {
            for mu in 0..d {
                bracket[[mu, alpha, beta]] =
                    apply(&e[[mu, beta]], alpha) - apply(&e[[mu, alpha]], beta);
            }
        }
    }
    Array3::from_shape_fn((d, d, d), |(gamma, alpha, beta)| {
        let mut acc = Jet::zero(d, order);
        for mu in 0..d {
            acc = acc + &e_inv[[gamma, mu]] * &bracket[[mu, alpha, beta]];
        }
        acc
    })
}

/// `Ω^a_{ij} = ∂_j N_i^a − ∂_i N_j^a + N_i^b ∂_b N_j^a − N_j^b ∂_b N_i^a`.
pub fn n_curvature_jets(shape: BundleShape, n: &Array2<Jet>) -> Array3<Jet> {
    let (nb, m, d) = (shape.n, shape.m, shape.dim());
    Array3::from_shape_fn((m, nb, nb), |(a, i, j)| {
        let mut acc = n[[a, i]].partial(j) - n[[a, j]].partial(i);
        for b in 0..m {
            acc = acc + &n[[b, i]] * &n[[a, j]].partial(shape.fiber(b))
                - &n[[b, j]] * &n[[a, i]].partial(shape.fiber(b));
        }
        debug_assert_eq!(acc.nvars(), d);
        acc
    })
}

pub fn values3(a: &Array3<Jet>) -> Array3<f64> {
    a.mapv(|j| j.value())
}

/// Frame and co-frame at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct FramePoint {
    /// Column `α` is `δ_α` in the coordinate basis.
    pub e: DMatrix<f64>,
    /// Row `α` is the co-frame form `δ^α` in the coordinate co-basis.
    pub e_inv: DMatrix<f64>,
}

impl FramePoint {
    /// Coordinate components of `δ_α`.
    pub fn frame_vector(&self, alpha: usize) -> Vec<f64> {
        self.e.column(alpha).iter().copied().collect()
    }

    pub fn duality_residual(&self) -> f64 {
        let p = &self.e * &self.e_inv;
        (p - DMatrix::identity(self.e.nrows(), self.e.ncols())).amax()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnholonomyPoint {
    /// `w[[γ, α, β]] = W^γ_{αβ}`.
    pub w: Array3<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NCurvaturePoint {
    /// `omega[[a, i, j]] = Ω^a_{ij}`.
    pub omega: Array3<f64>,
}

pub fn adapted_frame(nconn: &NConnectionField, u: &[f64]) -> Result<FramePoint> {
    let n = nconn.jets(u, 0)?;
    let (e, e_inv) = frame_matrices(nconn.shape, &n);
    Ok(FramePoint {
        e: linalg::values(&e),
        e_inv: linalg::values(&e_inv),
    })
}

pub fn anholonomy(nconn: &NConnectionField, u: &[f64]) -> Result<AnholonomyPoint> {
    let n = nconn.jets(u, 1)?;
    Ok(AnholonomyPoint {
        w: values3(&anholonomy_jets(nconn.shape, &n)),
    })
}

pub fn n_curvature(nconn: &NConnectionField, u: &[f64]) -> Result<NCurvaturePoint> {
    let n = nconn.jets(u, 1)?;
    Ok(NCurvaturePoint {
        omega: values3(&n_curvature_jets(nconn.shape, &n)),
    })
}

/// The coordinate-basis metric: `g_ij + N_i^a N_j^b h_ab`, `h_ab N_i^a`, `h_ab`.
pub fn offdiagonal_metric(src: &dyn GeometrySource, u: &[f64]) -> Result<DMatrix<f64>> {
    Ok(linalg::values(&src.geometry(u, 0)?.offdiagonal_metric()))
}

/// A pure fiber transform `y' = M(x) y`, with `m[[a', a]] = M_a^{a'}`.
#[derive(Debug, Clone)]
pub struct FiberTransform {
    pub shape: BundleShape,
    entries: Vec<ScalarField>,
}

impl FiberTransform {
    pub fn new(shape: BundleShape, rows: Vec<Vec<ScalarField>>) -> Result<Self> {
        if rows.len() != shape.m || rows.iter().any(|r| r.len() != shape.m) {
            return Err(Error::Shape(format!(
                "fiber transform must be {}×{}",
                shape.m, shape.m
            )));
        }
        Ok(FiberTransform {
            shape,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn jets(&self, u: &[f64], order: usize) -> Result<Array2<Jet>> {
        let coords = Jet::seed(u, order);
        let m = self.shape.m;
        let mut out = Vec::with_capacity(m * m);
        for f in &self.entries {
            out.push(f.eval_on(&coords)?);
        }
        Ok(Array2::from_shape_vec((m, m), out).expect("m×m entries"))
    }
}

/// Coefficients of the N-connection after the fiber transform `y' = M(x) y`:
/// `N'^{a'}_i = M_a^{a'} N_i^a − (∂_i M_a^{a'}) y^a`. Returned as `[[a', i]]`.
pub fn n_transform(
    nconn: &NConnectionField,
    mx: &FiberTransform,
    u: &[f64],
) -> Result<DMatrix<f64>> {
    let shape = nconn.shape;
    if mx.shape != shape {
        return Err(Error::Shape("fiber transform on a different chart".into()));
    }
    let mj = mx.jets(u, 1)?;
    let mval = linalg::values(&mj);
    linalg::checked_inverse(&mval, "fiber transform")?;
    for a in 0..shape.m {
        for b in 0..shape.m {
            for c in 0..shape.m {
                if mj[[a, b]].gradient(shape.fiber(c)).abs() > 1e-12 {
                    return Err(Error::Invalid(
                        "fiber transform must depend on base coordinates only".into(),
                    ));
                }
            }
        }
    }
    let n = linalg::values(&nconn.jets(u, 0)?);
    let y = &u[shape.n..];
    Ok(DMatrix::from_fn(shape.m, shape.n, |ap, i| {
        let mut v = 0.0;
        for a in 0..shape.m {
            v += mval[(ap, a)] * n[(a, i)] - mj[[ap, a]].gradient(i) * y[a];
        }
        v
    }))
}
