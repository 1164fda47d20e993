//! Report layout, JSON conversion of tensors and the finiteness gate.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use ndarray::{ArrayBase, Axis, Data, Dimension, IxDyn};
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};

/// Bumped whenever the report layout changes incompatibly.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config: Value,
    pub points: Vec<Value>,
    pub summary: Value,
    pub version: Value,
}

pub fn version() -> Value {
    json!({ "tool": env!("CARGO_PKG_VERSION"), "schema": SCHEMA_VERSION })
}

impl Report {
    pub fn new(config: Value, points: Vec<Value>, summary: Value) -> Self {
        Report {
            config,
            points,
            summary,
            version: version(),
        }
    }

    /// Pretty JSON with a trailing newline. Object keys are sorted, so equal
    /// reports serialize to identical bytes.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports contain only JSON values");
        s.push('\n');
        s
    }

    /// Fails with the numeric status when any computed number is NaN or
    /// infinite (serialized as `null`).
    pub fn check_finite(&self) -> CliResult<()> {
        for (i, p) in self.points.iter().enumerate() {
            if let Some(path) = null_path(p, &format!("points[{i}]")) {
                return Err(CliError::numeric(format!("non-finite value at {path}")));
            }
        }
        if let Some(path) = null_path(&self.summary, "summary") {
            return Err(CliError::numeric(format!("non-finite value at {path}")));
        }
        Ok(())
    }

    /// Writes to `out`, or to standard output when absent.
    pub fn emit(&self, out: Option<&Path>) -> CliResult<()> {
        write_output(&self.to_json(), out)
    }
}

pub fn write_output(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn null_path(v: &Value, here: &str) -> Option<String> {
    match v {
        Value::Null => Some(here.to_string()),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .find_map(|(i, x)| null_path(x, &format!("{here}[{i}]"))),
        Value::Object(map) => map.iter().find_map(|(k, x)| null_path(x, &format!("{here}.{k}"))),
        _ => None,
    }
}

/// A float as JSON; non-finite values become `null` and are caught by
/// [`Report::check_finite`].
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// Nested arrays, outermost index first.
pub fn tensor<S, D>(a: &ArrayBase<S, D>) -> Value
where
    S: Data<Elem = f64>,
    D: Dimension,
{
    fn rec(v: ndarray::ArrayView<f64, IxDyn>) -> Value {
        if v.ndim() == 0 {
            return num(*v.first().expect("zero-dimensional views hold one value"));
        }
        Value::Array(v.axis_iter(Axis(0)).map(rec).collect())
    }
    rec(a.view().into_dyn())
}

/// Row-major nested arrays.
pub fn matrix(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| num(m[(i, j)])).collect()))
            .collect(),
    )
}

pub fn vector(v: &[f64]) -> Value {
    Value::Array(v.iter().copied().map(num).collect())
}

/// Diagnostics of one sample point: the JSON entries and the named residuals
/// with their tolerances (`None` for informational values).
pub struct PointOutput {
    pub value: Value,
    pub residuals: Vec<(&'static str, f64, Option<f64>)>,
}

/// Merges per-point outcomes in input order into a report. Points that failed
/// are listed in the summary; more than `degenerate_fraction` of them, or any
/// non-finite number, fails with the numeric status.
pub fn assemble(
    config: Value,
    points: &[Vec<f64>],
    outcomes: Vec<dgeom_core::Result<PointOutput>>,
    degenerate_fraction: f64,
) -> CliResult<Report> {
    let mut table = ResidualTable::default();
    let mut failures = Vec::new();
    let mut values = Vec::with_capacity(points.len());
    for (i, (u, outcome)) in points.iter().zip(outcomes).enumerate() {
        let mut entry = Map::new();
        entry.insert("index".into(), json!(i));
        entry.insert("u".into(), vector(u));
        match outcome {
            Ok(p) => {
                for (name, v, t) in &p.residuals {
                    table.record(name, *v, *t);
                }
                entry.insert("status".into(), json!("ok"));
                if let Value::Object(map) = p.value {
                    entry.extend(map);
                }
            }
            Err(e) => {
                entry.insert("status".into(), json!("failed"));
                entry.insert("error".into(), json!(e.to_string()));
                failures.push(json!({"index": i, "error": e.to_string()}));
            }
        }
        values.push(Value::Object(entry));
    }
    let total = points.len();
    let failed = failures.len();
    let fraction = failed as f64 / total as f64;
    let summary = json!({
        "points": {"total": total, "ok": total - failed, "failed": failed},
        "failed_fraction": num(fraction),
        "failures": failures,
        "residuals": table.to_json(),
        "pass": failed == 0 && table.all_pass(),
    });
    let report = Report::new(config, values, summary);
    report.check_finite()?;
    if fraction > degenerate_fraction {
        return Err(CliError::numeric(format!(
            "{failed} of {total} points failed numerically (limit {:.0}%); first: {}",
            100.0 * degenerate_fraction,
            report.summary["failures"][0]["error"].as_str().unwrap_or("")
        )));
    }
    Ok(report)
}

/// Max of each named residual over the points, compared with its tolerance.
#[derive(Debug, Default, Clone)]
pub struct ResidualTable {
    entries: BTreeMap<String, (f64, Option<f64>)>,
}

impl ResidualTable {
    pub fn record(&mut self, name: &str, value: f64, tolerance: Option<f64>) {
        let e = self.entries.entry(name.to_string()).or_insert((0.0, tolerance));
        // NaN must survive the max so that it reaches the finiteness gate.
        e.0 = if value.is_nan() || e.0.is_nan() { f64::NAN } else { e.0.max(value) };
    }

    pub fn all_pass(&self) -> bool {
        self.entries.values().all(|(v, t)| t.is_none_or(|t| *v <= t))
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (k, (v, t)) in &self.entries {
            let mut e = Map::new();
            e.insert("max".into(), num(*v));
            if let Some(t) = t {
                e.insert("tolerance".into(), num(*t));
                e.insert("pass".into(), Value::Bool(*v <= *t));
            }
            map.insert(k.clone(), Value::Object(e));
        }
        Value::Object(map)
    }
}
