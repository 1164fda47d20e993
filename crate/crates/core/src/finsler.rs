//! Metrics and nonlinear connections generated by a Finsler function `F` or a
//! regular Lagrangian `L` on a tangent-bundle chart `(x^i, y^i)`.
//!
//! With `L = F²` the fundamental tensor is `g_ij = ½ ∂²L/∂y^i∂y^j`, the
//! Christoffel-like symbols `c^i_{jk}` are built from x-derivatives of `g`,
//! and the Cartan nonlinear connection is `N^i_j = ½ ∂/∂y^j (c^i_{lk} y^l y^k)`.
//! In the Riemannian case `L = g_ij(x) y^i y^j` this is `N^i_j = Γ^i_{jk} y^k`.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, Array3};

use crate::bundle::{GeometryJets, GeometrySource};
use crate::dsl::{parse_field, BundleShape, ScalarField};
use crate::error::{Error, Result};
use crate::jet::{Jet, MAX_ORDER};
use crate::linalg;

/// Fiber points with `|y|` below this are treated as the zero section.
pub const ZERO_SECTION: f64 = 1e-3;

/// Scale factors used for the numerical homogeneity checks.
pub const HOMOGENEITY_SCALES: [f64; 3] = [0.5, 2.0, 3.0];

/// Jet orders consumed between `L` and the Cartan N-connection.
const CARTAN_LOSS: usize = 4;

/// A Finsler function `F(x, y)` on an `(n, n)` chart.
#[derive(Debug, Clone)]
pub struct FinslerFunction {
    f: ScalarField,
}

impl FinslerFunction {
    pub fn new(f: ScalarField) -> Result<Self> {
        let s = f.shape();
        if s.n != s.m {
            return Err(Error::Shape(format!(
                "a Finsler function lives on a tangent bundle (n = m), got {s}"
            )));
        }
        Ok(FinslerFunction { f })
    }

    pub fn parse(src: &str, n: usize) -> Result<Self> {
        Self::new(parse_field(src, BundleShape::new(n, n)?)?)
    }

    pub fn field(&self) -> &ScalarField {
        &self.f
    }

    pub fn shape(&self) -> BundleShape {
        self.f.shape()
    }

    pub fn value(&self, u: &[f64]) -> Result<f64> {
        check_fiber(self.shape(), u)?;
        self.f.eval(u)
    }

    /// Largest `|F(x, λy) − λF(x, y)|` over [`HOMOGENEITY_SCALES`].
    pub fn homogeneity_residual(&self, u: &[f64]) -> Result<f64> {
        let n = self.shape().n;
        let base = self.value(u)?;
        let mut worst: f64 = 0.0;
        for lambda in HOMOGENEITY_SCALES {
            let mut v = u.to_vec();
            v[n..].iter_mut().for_each(|y| *y *= lambda);
            worst = worst.max((self.value(&v)? - lambda * base).abs());
        }
        Ok(worst)
    }

    pub fn lagrangian(&self) -> Lagrangian {
        Lagrangian::Finsler(self.clone())
    }
}

/// The function whose fiber Hessian gives the metric: `F²` or a raw `L`.
#[derive(Debug, Clone)]
pub enum Lagrangian {
    Finsler(FinslerFunction),
    Regular(ScalarField),
}

impl Lagrangian {
    pub fn shape(&self) -> BundleShape {
        match self {
            Lagrangian::Finsler(f) => f.shape(),
            Lagrangian::Regular(l) => l.shape(),
        }
    }

    pub fn jet(&self, u: &[f64], order: usize) -> Result<Jet> {
        if order > MAX_ORDER {
            return Err(Error::OrderOverflow {
                requested: order,
                max: MAX_ORDER,
            });
        }
        match self {
            Lagrangian::Finsler(f) => {
                check_fiber(f.shape(), u)?;
                let fj = f.f.eval_jet(u, order)?;
                if fj.value() <= 0.0 {
                    return Err(Error::Domain(format!(
                        "Finsler function is not positive ({})",
                        fj.value()
                    )));
                }
                Ok(&fj * &fj)
            }
            Lagrangian::Regular(l) => l.eval_jet(u, order),
        }
    }
}

fn check_fiber(shape: BundleShape, u: &[f64]) -> Result<()> {
    if u.len() != shape.dim() {
        return Err(Error::Shape(format!(
            "point of length {} on a chart of dimension {}",
            u.len(),
            shape.dim()
        )));
    }
    let norm = u[shape.n..].iter().map(|y| y * y).sum::<f64>().sqrt();
    if norm < ZERO_SECTION {
        return Err(Error::Domain(format!(
            "fiber point |y| = {norm:e} is on the excluded zero section"
        )));
    }
    Ok(())
}

/// Fiber Hessian `½ ∂²L/∂y^i∂y^j`, two orders below `l`.
pub fn fiber_hessian(n: usize, l: &Jet) -> Array2<Jet> {
    Array2::from_shape_fn((n, n), |(i, j)| l.partial(n + i).partial(n + j).scale(0.5))
}

/// Fundamental tensor and Cartan N-connection from `L` jets of order `P`
/// expanded at a point with fiber coordinates `y0`: `g` comes back at order
/// `P − 2`, `N` (stored `[[i, j]] = N^i_j`) at `P − 4`.
pub fn cartan_jets(n: usize, l: &Jet, y0: &[f64]) -> Result<(Array2<Jet>, Array2<Jet>)> {
    if l.order() < CARTAN_LOSS {
        return Err(Error::OrderOverflow {
            requested: CARTAN_LOSS,
            max: l.order(),
        });
    }
    let d = 2 * n;
    let g = fiber_hessian(n, l);
    let ginv = linalg::inverse(&g, "Finsler metric")?;
    let dg = Array3::from_shape_fn((n, n, n), |(k, a, b)| g[[a, b]].partial(k));
    let c_order = l.order() - 3;
    let c = Array3::from_shape_fn((n, n, n), |(i, j, k)| {
        let mut acc = Jet::zero(d, c_order);
        for h in 0..n {
            let bracket = &dg[[j, h, k]] + &dg[[k, j, h]] - &dg[[h, j, k]];
            acc = acc + &ginv[[i, h]] * &bracket;
        }
        acc.scale(0.5)
    });
    let y: Vec<Jet> = (0..n)
        .map(|a| Jet::variable(d, c_order, n + a, y0[a]))
        .collect();
    let spray: Vec<Jet> = (0..n)
        .map(|i| {
            let mut acc = Jet::zero(d, c_order);
            for a in 0..n {
                for b in 0..n {
                    acc = acc + &(&c[[i, a, b]] * &y[a]) * &y[b];
                }
            }
            acc
        })
        .collect();
    let ncoef = Array2::from_shape_fn((n, n), |(i, j)| spray[i].partial(n + j).scale(0.5));
    Ok((g, ncoef))
}

/// Geometry generated by a Finsler function or Lagrangian: `g = h = g^[L]`
/// and the Cartan N-connection.
#[derive(Debug, Clone)]
pub struct FinslerGeometry {
    pub lagrangian: Lagrangian,
}

impl FinslerGeometry {
    pub fn new(lagrangian: Lagrangian) -> Self {
        FinslerGeometry { lagrangian }
    }

    pub fn from_finsler(f: FinslerFunction) -> Self {
        Self::new(Lagrangian::Finsler(f))
    }
}

impl GeometrySource for FinslerGeometry {
    fn shape(&self) -> BundleShape {
        self.lagrangian.shape()
    }

    fn max_order(&self) -> usize {
        MAX_ORDER - CARTAN_LOSS
    }

    fn geometry(&self, u: &[f64], order: usize) -> Result<GeometryJets> {
        if order > self.max_order() {
            return Err(Error::OrderOverflow {
                requested: order,
                max: self.max_order(),
            });
        }
        let shape = self.shape();
        let l = self.lagrangian.jet(u, order + CARTAN_LOSS)?;
        let (g, n) = cartan_jets(shape.n, &l, &u[shape.n..])?;
        let g = g.mapv(|x| x.truncate(order));
        Ok(GeometryJets {
            shape,
            h: g.clone(),
            g,
            n,
        })
    }
}

/// The fundamental tensor at a point with its rank and definiteness.
#[derive(Debug, Clone, PartialEq)]
pub struct FinslerMetricPoint {
    pub g: DMatrix<f64>,
    pub rank: usize,
    pub min_eigenvalue: f64,
    pub positive_definite: bool,
}

impl FinslerMetricPoint {
    fn from_matrix(g: DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(g.clone()).eigenvalues;
        let scale = eig.amax().max(1.0);
        let rank = eig.iter().filter(|l| l.abs() > 1e-10 * scale).count();
        let min_eigenvalue = eig.min();
        FinslerMetricPoint {
            g,
            rank,
            min_eigenvalue,
            positive_definite: min_eigenvalue > 0.0,
        }
    }
}

pub fn finsler_metric(f: &FinslerFunction, u: &[f64]) -> Result<FinslerMetricPoint> {
    let l = f.lagrangian().jet(u, 2)?;
    Ok(FinslerMetricPoint::from_matrix(linalg::values(
        &fiber_hessian(f.shape().n, &l),
    )))
}

/// `½ ∂²L/∂y∂y` without any homogeneity requirement.
pub fn lagrange_metric(l: &ScalarField, u: &[f64]) -> Result<FinslerMetricPoint> {
    let s = l.shape();
    if s.n != s.m {
        return Err(Error::Shape(format!("Lagrangian must live on an (n, n) chart, got {s}")));
    }
    let lj = l.eval_jet(u, 2)?;
    Ok(FinslerMetricPoint::from_matrix(linalg::values(
        &fiber_hessian(s.n, &lj),
    )))
}

/// Cartan N-connection values `[[i, j]] = N^i_j`.
pub fn cartan_nconnection(f: &FinslerFunction, u: &[f64]) -> Result<DMatrix<f64>> {
    let n = f.shape().n;
    let l = f.lagrangian().jet(u, CARTAN_LOSS)?;
    let (_, nc) = cartan_jets(n, &l, &u[n..])?;
    Ok(linalg::values(&nc))
}

/// Coefficients `ω_{αβ}` of `θ = g_ij δy^i ∧ dx^j = ½ ω_{αβ} du^α ∧ du^β` in the
/// coordinate co-basis, at the order of the N jets.
pub fn kahler_form_jets(n: usize, g: &Array2<Jet>, nc: &Array2<Jet>) -> Array2<Jet> {
    let d = 2 * n;
    let order = nc[[0, 0]].order();
    let zero = Jet::zero(d, order);
    let mut w = Array2::from_elem((d, d), zero.clone());
    for i in 0..n {
        for j in 0..n {
            let gij = g[[i, j]].truncate(order);
            w[[n + i, j]] = gij.clone();
            w[[j, n + i]] = -gij;
        }
    }
    // g_ij N^i_k dx^k ∧ dx^j
    let a = Array2::from_shape_fn((n, n), |(k, j)| {
        let mut acc = zero.clone();
        for i in 0..n {
            acc = acc + &g[[i, j]] * &nc[[i, k]];
        }
        acc
    });
    for k in 0..n {
        for j in 0..n {
            w[[k, j]] = &a[[k, j]] - &a[[j, k]];
        }
    }
    w
}

/// Largest component of `dθ` in the coordinate co-basis.
pub fn kahler_form_closure(f: &FinslerFunction, u: &[f64]) -> Result<f64> {
    kahler_closure_for(&f.lagrangian(), u)
}

pub fn kahler_closure_for(lagrangian: &Lagrangian, u: &[f64]) -> Result<f64> {
    let n = lagrangian.shape().n;
    let l = lagrangian.jet(u, CARTAN_LOSS + 1)?;
    let (g, nc) = cartan_jets(n, &l, &u[n..])?;
    let w = kahler_form_jets(n, &g, &nc);
    let d = 2 * n;
    let mut worst: f64 = 0.0;
    for a in 0..d {
        for b in 0..d {
            for c in 0..d {
                let v = w[[b, c]].gradient(a) + w[[c, a]].gradient(b) + w[[a, b]].gradient(c);
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// The almost-complex structure in the adapted basis `(δ_i, ∂/∂y^i)`:
/// `I(δ_i) = −∂/∂y^i`, `I(∂/∂y^i) = δ_i`. Column `α` is the image of basis
/// vector `α`.
pub fn almost_complex_structure(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(n + i, i)] = -1.0;
        j[(i, n + i)] = 1.0;
    }
    j
}

/// Builtin Finsler functions: `euclidean`, `riemann:<g11>,<g12>,<g22>`,
/// `quartic`, `randers:<a11>,<a12>,<a22>;<b1>,<b2>` (all with n = 2). Randers
/// metrics are a standard extra example, not derived from the other data.
pub fn builtin(id: &str) -> Result<FinslerFunction> {
    let (name, args) = match id.split_once(':') {
        Some((a, b)) => (a, Some(b)),
        None => (id, None),
    };
    let src = match (name, args) {
        ("euclidean", None) => "sqrt(y1^2 + y2^2)".to_string(),
        ("quartic", None) => "sqrt(sqrt(y1^4 + y2^4))".to_string(),
        ("riemann", None) => riemann_source("1 + 0.2*x1^2", "0.1*x1*x2", "1 + 0.3*sin(x2)^2"),
        ("riemann", Some(spec)) => {
            let parts: Vec<&str> = spec.split(',').collect();
            if parts.len() != 3 {
                return Err(Error::Invalid(format!(
                    "riemann:<g11>,<g12>,<g22> needs three entries, got `{spec}`"
                )));
            }
            riemann_source(parts[0], parts[1], parts[2])
        }
        ("randers", None) => randers_source(
            ["1 + 0.2*x1^2", "0.1*x1*x2", "1 + 0.1*x2^2"],
            ["0.2*sin(x2)", "0.1*x1"],
        ),
        ("randers", Some(spec)) => {
            let (a, b) = spec.split_once(';').ok_or_else(|| {
                Error::Invalid("randers:<a11>,<a12>,<a22>;<b1>,<b2> expected".into())
            })?;
            let a: Vec<&str> = a.split(',').collect();
            let b: Vec<&str> = b.split(',').collect();
            if a.len() != 3 || b.len() != 2 {
                return Err(Error::Invalid(format!("malformed randers spec `{spec}`")));
            }
            randers_source([a[0], a[1], a[2]], [b[0], b[1]])
        }
        _ => return Err(Error::Invalid(format!("unknown Finsler builtin `{id}`"))),
    };
    FinslerFunction::parse(&src, 2)
}

/// Identifiers of the parameter-free builtin Finsler functions.
pub const BUILTIN_IDS: [&str; 4] = ["euclidean", "riemann", "quartic", "randers"];

fn riemann_source(g11: &str, g12: &str, g22: &str) -> String {
    format!("sqrt(({g11})*y1^2 + 2*({g12})*y1*y2 + ({g22})*y2^2)")
}

fn randers_source(a: [&str; 3], b: [&str; 2]) -> String {
    format!(
        "{} + ({})*y1 + ({})*y2",
        riemann_source(a[0], a[1], a[2]),
        b[0],
        b[1]
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_metric_is_identity() {
        let f = builtin("euclidean").unwrap();
        let p = finsler_metric(&f, &[0.3, 0.1, 0.7, -1.2]).unwrap();
        assert!((p.g.clone() - DMatrix::identity(2, 2)).amax() < 1e-14);
        assert_eq!(p.rank, 2);
        let n = cartan_nconnection(&f, &[0.3, 0.1, 0.7, -1.2]).unwrap();
        assert!(n.amax() < 1e-14);
    }

    #[test]
    fn zero_section_rejected() {
        let f = builtin("quartic").unwrap();
        assert!(matches!(
            finsler_metric(&f, &[0.0, 0.0, 1e-4, 0.0]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn lagrange_metric_by_hand() {
        let s = BundleShape::new(2, 2).unwrap();
        let l = parse_field("y1^4 + x1*y2^2", s).unwrap();
        let p = lagrange_metric(&l, &[1.0, 0.4, 1.0, 1.0]).unwrap();
        assert!((p.g[(0, 0)] - 6.0).abs() < 1e-13);
        assert!((p.g[(1, 1)] - 1.0).abs() < 1e-13);
        assert!(p.g[(0, 1)].abs() < 1e-13);
    }

    #[test]
    fn almost_complex_structure_squares_to_minus_one() {
        let j = almost_complex_structure(3);
        assert_eq!(&j * &j, -DMatrix::identity(6, 6));
    }

    #[test]
    fn builtins_are_homogeneous() {
        for id in BUILTIN_IDS {
            let f = builtin(id).unwrap();
            let r = f.homogeneity_residual(&[0.3, -0.5, 0.8, 1.1]).unwrap();
            assert!(r < 1e-12, "{id}: {r}");
        }
    }
}
