//! The `star` subcommand: one product of two polynomials.

use std::path::Path;

use dgeom_core::gauge::DeSitterAlgebra;
use dgeom_core::ncalg::{lie_star, moyal_star, qplane_star, LieStructure, Poly, QOrdering, ThetaMatrix, LIE_MAX_ORDER};
use ndarray::Array3;
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult, Context};
use crate::report::{num, version};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ProductKind {
    Moyal,
    Lie,
    Qplane,
}

#[derive(Debug, Clone)]
pub struct StarRequest {
    pub product: ProductKind,
    pub lhs: String,
    pub rhs: String,
    /// Moyal: strict upper triangle of θ, comma separated.
    pub theta: Option<String>,
    /// Lie: `su2`, `desitter[:l]` or a JSON file.
    pub structure: Option<String>,
    /// Lie: order in the structure constants.
    pub order: usize,
    /// Quantum plane: `re` or `re,im`.
    pub q: Option<String>,
    pub ordering: QOrdering,
}

/// Sparse structure constants on disk: `f^{ab}_c = value` and its
/// antisymmetric partner.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StructureFile {
    dim: usize,
    nonzero: Vec<(usize, usize, usize, f64)>,
}

fn numbers(src: &str, what: &str) -> CliResult<Vec<f64>> {
    src.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::usage(format!("{what}: `{s}` is not a finite number")))
        })
        .collect()
}

pub fn load_structure(spec: &str) -> CliResult<LieStructure> {
    if spec == "su2" {
        return Ok(LieStructure::su2());
    }
    if let Some(rest) = spec.strip_prefix("desitter") {
        let l = match rest.strip_prefix(':') {
            Some(v) => numbers(v, "de Sitter radius")?[0],
            None if rest.is_empty() => 1.0,
            None => return Err(CliError::usage(format!("unknown structure `{spec}`"))),
        };
        return Ok(DeSitterAlgebra::default_euclidean(l).context(|| "de Sitter algebra".into())?.structure);
    }
    let file: StructureFile = crate::config::load_json(Path::new(spec))?;
    let mut f = Array3::zeros((file.dim, file.dim, file.dim));
    for &(a, b, c, v) in &file.nonzero {
        if a >= file.dim || b >= file.dim || c >= file.dim {
            return Err(CliError::usage(format!("structure index ({a}, {b}, {c}) outside dimension {}", file.dim)));
        }
        f[[a, b, c]] = v;
        f[[b, a, c]] = -v;
    }
    LieStructure::new(f).context(|| "structure constants".into())
}

fn theta_from(src: &str, nvars: usize) -> CliResult<ThetaMatrix> {
    let upper = numbers(src, "theta")?;
    // the number of upper entries fixes the dimension
    let n = (1..=16).find(|k| k * (k - 1) / 2 == upper.len()).ok_or_else(|| {
        CliError::usage(format!("{} θ entries is not the upper triangle of a square matrix", upper.len()))
    })?;
    if n < nvars {
        return Err(CliError::usage(format!("θ is {n}×{n} but the polynomials use {nvars} variables")));
    }
    ThetaMatrix::from_upper(n, &upper).context(|| "theta".into())
}

fn parse_poly(src: &str, nvars: usize, side: &str) -> CliResult<Poly> {
    Poly::parse(src, nvars).context(|| format!("{side} polynomial"))
}

/// Evaluates the product and returns its JSON description.
pub fn run_star(req: &StarRequest) -> CliResult<Value> {
    let used = Poly::infer_nvars(&req.lhs).max(Poly::infer_nvars(&req.rhs));
    let (result, params, nvars) = match req.product {
        ProductKind::Moyal => {
            let src = req.theta.as_deref().ok_or_else(|| CliError::usage("moyal needs --theta"))?;
            let theta = theta_from(src, used)?;
            let n = theta.dim();
            let (f, g) = (parse_poly(&req.lhs, n, "lhs")?, parse_poly(&req.rhs, n, "rhs")?);
            let r = moyal_star(&f, &g, &theta).context(|| "moyal product".into())?;
            let t: Vec<Value> = (0..n).map(|i| Value::Array((0..n).map(|j| num(theta.get(i, j))).collect())).collect();
            (r, json!({"theta": t}), n)
        }
        ProductKind::Lie => {
            let spec = req.structure.as_deref().ok_or_else(|| CliError::usage("lie needs --structure"))?;
            if req.order > LIE_MAX_ORDER {
                return Err(CliError::usage(format!(
                    "lie products are implemented to order {LIE_MAX_ORDER}, got {}",
                    req.order
                )));
            }
            let lie = load_structure(spec)?;
            let n = lie.dim();
            if used > n {
                return Err(CliError::usage(format!("polynomials use {used} variables, the algebra has {n}")));
            }
            let (f, g) = (parse_poly(&req.lhs, n, "lhs")?, parse_poly(&req.rhs, n, "rhs")?);
            let r = lie_star(&f, &g, &lie, req.order).context(|| "lie product".into())?;
            (r, json!({"structure": spec, "order": req.order}), n)
        }
        ProductKind::Qplane => {
            let src = req.q.as_deref().ok_or_else(|| CliError::usage("qplane needs --q"))?;
            let parts = numbers(src, "q")?;
            let q = match parts.as_slice() {
                [re] => Complex64::new(*re, 0.0),
                [re, im] => Complex64::new(*re, *im),
                _ => return Err(CliError::usage("--q takes `re` or `re,im`")),
            };
            if used > 2 {
                return Err(CliError::usage("the quantum plane has two variables u1, u2"));
            }
            let (f, g) = (parse_poly(&req.lhs, 2, "lhs")?, parse_poly(&req.rhs, 2, "rhs")?);
            let r = qplane_star(&f, &g, q, req.ordering).context(|| "quantum-plane product".into())?;
            (r, json!({"q": [num(q.re), num(q.im)], "ordering": req.ordering}), 2)
        }
    };
    let terms: Vec<Value> = result
        .terms()
        .map(|(e, c)| json!({"exponents": e.to_vec(), "re": num(c.re), "im": num(c.im)}))
        .collect();
    if terms.iter().any(|t| t["re"].is_null() || t["im"].is_null()) {
        return Err(CliError::numeric("product has non-finite coefficients"));
    }
    Ok(json!({
        "product": format!("{:?}", req.product).to_lowercase(),
        "nvars": nvars,
        "lhs": req.lhs,
        "rhs": req.rhs,
        "parameters": params,
        "result": result.to_string(),
        "terms": terms,
        "version": version(),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Exit;

    fn req(product: ProductKind, lhs: &str, rhs: &str) -> StarRequest {
        StarRequest {
            product,
            lhs: lhs.into(),
            rhs: rhs.into(),
            theta: None,
            structure: None,
            order: 1,
            q: None,
            ordering: QOrdering::Normal,
        }
    }

    #[test]
    fn moyal_coordinate_product() {
        let mut r = req(ProductKind::Moyal, "u1", "u2");
        r.theta = Some("0.5".into());
        let out = run_star(&r).unwrap();
        // u1 ⋆ u2 = u1 u2 + i θ/2
        let terms = out["terms"].as_array().unwrap();
        let constant = terms.iter().find(|t| t["exponents"] == json!([0, 0])).unwrap();
        assert_eq!(constant["im"], json!(0.25));
    }

    #[test]
    fn lie_and_qplane() {
        let mut r = req(ProductKind::Lie, "u1", "u2");
        r.structure = Some("su2".into());
        let out = run_star(&r).unwrap();
        assert_eq!(out["nvars"], json!(3));
        let mut q = req(ProductKind::Qplane, "u2", "u1");
        q.q = Some("2".into());
        let out = run_star(&q).unwrap();
        assert_eq!(out["terms"][0]["re"], json!(0.5));
    }

    #[test]
    fn errors_map_to_exit_codes() {
        let mut r = req(ProductKind::Moyal, "u1 +* u2", "u2");
        r.theta = Some("0.5".into());
        assert_eq!(run_star(&r).unwrap_err().exit, Exit::Parse);
        let mut r = req(ProductKind::Moyal, "u1", "u2");
        r.theta = Some("1,2".into());
        assert_eq!(run_star(&r).unwrap_err().exit, Exit::Usage);
        let mut r = req(ProductKind::Lie, "u1", "u2");
        r.structure = Some("su2".into());
        r.order = 3;
        assert_eq!(run_star(&r).unwrap_err().exit, Exit::Usage);
    }
}
