//! JSON run configuration and its validation into library objects.

use std::path::{Path, PathBuf};

use dgeom_core::bundle::{BundleField, DMetricField, GeometrySource, NConnectionField, SymmetricFields};
use dgeom_core::catalog::{self, Geometry};
use dgeom_core::connection::{ConnectionSelector, UserConnection};
use dgeom_core::dsl::{parse_field, BundleShape, ScalarField};
use dgeom_core::finsler::{FinslerFunction, FinslerGeometry};
use dgeom_core::sampling::SampleSpec;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Context};

/// Where the geometry comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    /// A catalog id such as `sphere2xflat:1.5`.
    Builtin(String),
    /// Metric blocks and N-connection as expressions.
    Fields(FieldGeometry),
    /// A Finsler function on an `(n, n)` chart.
    Finsler { f: String, n: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldGeometry {
    /// `[n, m]`.
    pub shape: [usize; 2],
    /// Horizontal block, full `n × n` rows.
    pub g: Vec<Vec<String>>,
    /// Vertical block, full `m × m` rows.
    pub h: Vec<Vec<String>>,
    /// `n_connection[a][i]` is `N_i^a`; zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_connection: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserCoefficient {
    /// `[upper, left, right]` of `Γ^upper_{left right}`, zero-based.
    pub index: [usize; 3],
    pub field: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ConnectionSpec {
    #[default]
    Canonical,
    LeviCivita,
    User(Vec<UserCoefficient>),
}

/// Which quantities a sweep computes at every point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Modules {
    pub frame: bool,
    pub connection: bool,
    pub metricity: bool,
    pub torsion: bool,
    pub curvature: bool,
    pub ricci: bool,
    pub einstein: bool,
    pub spectral: bool,
    pub finsler: bool,
}

impl Default for Modules {
    fn default() -> Self {
        Modules {
            frame: false,
            connection: true,
            metricity: true,
            torsion: true,
            curvature: true,
            ricci: true,
            einstein: false,
            spectral: false,
            finsler: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EinsteinSpec {
    pub kappa: f64,
}

impl Default for EinsteinSpec {
    fn default() -> Self {
        EinsteinSpec { kappa: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralSpec {
    /// Cutoff `Λ` multiplying the heat-kernel densities.
    pub cutoff_scale: f64,
}

impl Default for SpectralSpec {
    fn default() -> Self {
        SpectralSpec { cutoff_scale: 1.0 }
    }
}

fn default_degenerate_fraction() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub connection: ConnectionSpec,
    #[serde(default)]
    pub sample: SampleSpec,
    /// Explicit evaluation points; replaces the random sample when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub modules: Modules,
    #[serde(default)]
    pub einstein: EinsteinSpec,
    #[serde(default)]
    pub spectral: SpectralSpec,
    /// Largest tolerated fraction of points that fail numerically.
    #[serde(default = "default_degenerate_fraction")]
    pub degenerate_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn builtin(id: &str) -> Self {
        RunConfig {
            geometry: GeometrySpec::Builtin(id.to_string()),
            connection: ConnectionSpec::default(),
            sample: SampleSpec::default(),
            points: None,
            modules: Modules::default(),
            einstein: EinsteinSpec::default(),
            spectral: SpectralSpec::default(),
            degenerate_fraction: default_degenerate_fraction(),
            output: None,
        }
    }
}

/// Reads and deserializes a JSON file; I/O and schema problems are usage
/// errors.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
}

/// A validated configuration ready to run.
/// Explicit points when given (checked against the chart), otherwise the
/// seeded sample.
pub fn resolve_points(explicit: Option<&[Vec<f64>]>, sample: &SampleSpec, shape: BundleShape) -> CliResult<Vec<Vec<f64>>> {
    let points = match explicit {
        Some(p) => {
            if let Some(bad) = p.iter().find(|u| u.len() != shape.dim() || u.iter().any(|x| !x.is_finite())) {
                return Err(CliError::usage(format!(
                    "point {bad:?} is not a finite point of the {}-dimensional chart",
                    shape.dim()
                )));
            }
            p.to_vec()
        }
        None => sample.points(shape).context(|| "sample".into())?,
    };
    if points.is_empty() {
        return Err(CliError::usage("no evaluation points"));
    }
    Ok(points)
}

pub struct Prepared {
    pub geometry: Geometry,
    pub selector: ConnectionSelector,
    pub points: Vec<Vec<f64>>,
}

fn field(src: &str, shape: BundleShape, what: impl FnOnce() -> String) -> CliResult<ScalarField> {
    parse_field(src, shape).context(what)
}

fn block(rows: &[Vec<String>], dim: usize, shape: BundleShape, name: &str) -> CliResult<SymmetricFields> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(CliError::usage(format!("metric block {name} must be {dim}×{dim}")));
    }
    let mut parsed = Vec::with_capacity(dim);
    for (i, row) in rows.iter().enumerate() {
        let mut out = Vec::with_capacity(dim);
        for (j, src) in row.iter().enumerate() {
            out.push(field(src, shape, || format!("{name}[{}][{}]", i + 1, j + 1))?);
        }
        parsed.push(out);
    }
    SymmetricFields::from_rows(parsed).context(|| format!("metric block {name}"))
}

impl FieldGeometry {
    pub fn build(&self) -> CliResult<BundleField> {
        let [n, m] = self.shape;
        let shape = BundleShape::new(n, m).context(|| "shape".into())?;
        let g = block(&self.g, n, shape, "g")?;
        let h = block(&self.h, m, shape, "h")?;
        let nconn = match &self.n_connection {
            None => NConnectionField::zero(shape),
            Some(rows) => {
                if rows.len() != m || rows.iter().any(|r| r.len() != n) {
                    return Err(CliError::usage(format!("n_connection must be {m}×{n} (rows indexed by fiber)")));
                }
                let mut parsed = Vec::with_capacity(m);
                for (a, row) in rows.iter().enumerate() {
                    let mut out = Vec::with_capacity(n);
                    for (i, src) in row.iter().enumerate() {
                        out.push(field(src, shape, || format!("n_connection[{}][{}]", a + 1, i + 1))?);
                    }
                    parsed.push(out);
                }
                NConnectionField::new(shape, parsed).context(|| "n_connection".into())?
            }
        };
        let metric = DMetricField::new(shape, g, h).context(|| "metric".into())?;
        BundleField::new(metric, nconn).context(|| "geometry".into())
    }
}

impl GeometrySpec {
    pub fn build(&self) -> CliResult<Geometry> {
        match self {
            GeometrySpec::Builtin(id) => catalog::builtin(id).context(|| "geometry".into()),
            GeometrySpec::Fields(f) => Ok(Geometry::Field(f.build()?)),
            GeometrySpec::Finsler { f, n } => {
                let func = FinslerFunction::parse(f, *n).context(|| "finsler function".into())?;
                Ok(Geometry::Finsler(FinslerGeometry::from_finsler(func)))
            }
        }
    }
}

impl ConnectionSpec {
    pub fn build(&self, shape: BundleShape) -> CliResult<ConnectionSelector> {
        Ok(match self {
            ConnectionSpec::Canonical => ConnectionSelector::Canonical,
            ConnectionSpec::LeviCivita => ConnectionSelector::LeviCivita,
            ConnectionSpec::User(coeffs) => {
                let mut user = UserConnection::new(shape);
                for c in coeffs {
                    let [a, b, d] = c.index;
                    let f = field(&c.field, shape, || format!("connection coefficient {:?}", c.index))?;
                    user.set(a, b, d, f).context(|| "connection".into())?;
                }
                ConnectionSelector::User(user)
            }
        })
    }
}

impl RunConfig {
    pub fn prepare(&self) -> CliResult<Prepared> {
        if !(0.0..=1.0).contains(&self.degenerate_fraction) {
            return Err(CliError::usage(format!(
                "degenerate_fraction must lie in [0, 1], got {}",
                self.degenerate_fraction
            )));
        }
        if !self.einstein.kappa.is_finite() || !(self.spectral.cutoff_scale > 0.0) {
            return Err(CliError::usage("einstein.kappa must be finite and spectral.cutoff_scale positive"));
        }
        let geometry = self.geometry.build()?;
        let shape = geometry.shape();
        let selector = self.connection.build(shape)?;
        let points = resolve_points(self.points.as_deref(), &self.sample, shape)?;
        Ok(Prepared {
            geometry,
            selector,
            points,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Exit;

    #[test]
    fn builtin_config_round_trips() {
        let cfg = RunConfig::builtin("flat");
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.prepare().unwrap().points.len(), 10);
    }

    #[test]
    fn malformed_expression_is_a_parse_error() {
        let text = r#"{"geometry": {"fields": {"shape": [1, 1], "g": [["1 + *x1"]], "h": [["1"]]}}}"#;
        let cfg: RunConfig = serde_json::from_str(text).unwrap();
        let err = cfg.prepare().err().unwrap();
        assert_eq!(err.exit, Exit::Parse);
        assert!(err.message.contains("g[1][1]") && err.message.contains("parse error at"), "{}", err.message);
    }

    #[test]
    fn unknown_fields_and_builtins_are_usage_errors() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"geometry": {"builtin": "flat"}, "colour": 1}"#).is_err());
        let cfg: RunConfig = serde_json::from_str(r#"{"geometry": {"builtin": "torus"}}"#).unwrap();
        assert_eq!(cfg.prepare().err().unwrap().exit, Exit::Usage);
    }

    #[test]
    fn user_connection_entries() {
        let text = r#"{"geometry": {"builtin": "flat"},
                       "connection": {"user": [{"index": [0, 1, 1], "field": "x1*y2"}]}}"#;
        let cfg: RunConfig = serde_json::from_str(text).unwrap();
        assert!(matches!(cfg.prepare().unwrap().selector, ConnectionSelector::User(_)));
        let bad = r#"{"geometry": {"builtin": "flat"},
                      "connection": {"user": [{"index": [0, 1, 9], "field": "1"}]}}"#;
        let cfg: RunConfig = serde_json::from_str(bad).unwrap();
        assert_eq!(cfg.prepare().err().unwrap().exit, Exit::Usage);
    }
}
