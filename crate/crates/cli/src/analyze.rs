//! Point sweeps over a configured geometry.

use dgeom_core::bundle::GeometrySource;
use dgeom_core::catalog::Geometry;
use dgeom_core::connection::{self, ConnectionSelector};
use dgeom_core::curvature::{self, EinsteinSources, LocalGeometry};
use dgeom_core::finsler::{self, Lagrangian};
use dgeom_core::linalg;
use dgeom_core::spectral::{self, GammaSet, VielbeinMethod};
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{Prepared, RunConfig};
use crate::error::CliResult;
use crate::report::{assemble, matrix, num, tensor, PointOutput, Report};

/// Residual tolerances applied in the summary.
pub mod tol {
    pub const METRICITY: f64 = 1e-9;
    pub const ANTISYMMETRY: f64 = 1e-10;
    pub const FRAME_DUALITY: f64 = 1e-12;
    pub const ANHOLONOMY_OMEGA: f64 = 1e-10;
    pub const CLIFFORD: f64 = 1e-12;
    pub const SPIN_DEFINING: f64 = 1e-9;
    pub const SPIN_HERMITICITY: f64 = 1e-12;
    pub const HOMOGENEITY: f64 = 1e-9;
    pub const KAHLER: f64 = 1e-7;
}

struct Sweep<'a> {
    cfg: &'a RunConfig,
    geometry: &'a Geometry,
    selector: &'a ConnectionSelector,
}

impl Sweep<'_> {
    fn point(&self, u: &[f64]) -> dgeom_core::Result<PointOutput> {
        let m = &self.cfg.modules;
        let src: &dyn GeometrySource = self.geometry;
        let sel = self.selector;
        let shape = src.shape();
        let (n, d) = (shape.n, shape.dim());
        let mut out = Map::new();
        let mut res = Vec::new();

        if m.frame {
            let geom = src.geometry(u, 1)?;
            let (e, e_inv) = geom.frame();
            let (e, e_inv) = (linalg::values(&e), linalg::values(&e_inv));
            let w = geom.anholonomy().mapv(|j| j.value());
            let omega = geom.n_curvature().mapv(|j| j.value());
            let duality = (&e * &e_inv - DMatrix::identity(d, d)).amax();
            let mut w_omega: f64 = 0.0;
            for ((a, i, j), v) in omega.indexed_iter() {
                w_omega = w_omega.max((w[[n + a, i, j]] - v).abs());
            }
            res.push(("frame_duality", duality, Some(tol::FRAME_DUALITY)));
            res.push(("anholonomy_omega", w_omega, Some(tol::ANHOLONOMY_OMEGA)));
            out.insert(
                "frame".into(),
                json!({"e": matrix(&e), "e_inv": matrix(&e_inv), "w": tensor(&w), "omega": tensor(&omega)}),
            );
        }

        if m.connection || m.metricity {
            let c = connection::dconnection(src, sel, u)?;
            if m.connection {
                out.insert(
                    "connection".into(),
                    json!({
                        "l_hh": tensor(&c.l_hh),
                        "l_vv_h": tensor(&c.l_vv_h),
                        "c_hh_v": tensor(&c.c_hh_v),
                        "c_vv_v": tensor(&c.c_vv_v),
                    }),
                );
            }
            if m.metricity {
                // only the canonical and Levi-Civita choices are metric by construction
                let gate = (!matches!(sel, ConnectionSelector::User(_))).then_some(tol::METRICITY);
                let r = connection::metric_compatibility_residual(&c, src, u)?;
                res.push(("metricity", r, gate));
                out.insert("metricity".into(), num(r));
            }
        }

        let needs_curvature = m.curvature || m.ricci || m.einstein;
        let local = if m.torsion || needs_curvature {
            Some(LocalGeometry::new(src, sel, u, if needs_curvature { 2 } else { 1 })?)
        } else {
            None
        };
        if m.torsion {
            let t = curvature::torsion_point(local.as_ref().expect("built above"));
            res.push(("torsion_antisymmetry", t.antisymmetry_residual(), Some(tol::ANTISYMMETRY)));
            out.insert(
                "torsion".into(),
                json!({
                    "t_hh": tensor(&t.t_hh),
                    "t_h_hv": tensor(&t.t_h_hv),
                    "s_vv": tensor(&t.s_vv),
                    "t_v_hh": tensor(&t.t_v_hh),
                    "t_v_vh": tensor(&t.t_v_vh),
                }),
            );
        }
        if needs_curvature {
            let local = local.as_ref().expect("built above");
            let full = local.curvature()?.mapv(|j| j.value());
            let c = curvature::CurvaturePoint::from_full(shape, full);
            if m.curvature {
                res.push(("curvature_antisymmetry", c.antisymmetry_residual(), Some(tol::ANTISYMMETRY)));
                out.insert(
                    "curvature".into(),
                    json!({
                        "r_h": tensor(&c.r_h),
                        "r_v": tensor(&c.r_v),
                        "p_h": tensor(&c.p_h),
                        "p_v": tensor(&c.p_v),
                        "s_h": tensor(&c.s_h),
                        "s_v": tensor(&c.s_v),
                        "max_abs": num(c.max_abs()),
                    }),
                );
            }
            let geom0 = src.geometry(u, 0)?;
            let g = linalg::values(&geom0.g);
            let h = linalg::values(&geom0.h);
            let ricci = curvature::ricci_from_values(&c, &g, &h)?;
            if m.ricci {
                res.push(("ricci_mixed_asymmetry", ricci.mixed_asymmetry(), None));
                out.insert(
                    "ricci".into(),
                    json!({
                        "r_hh": matrix(&ricci.r_hh),
                        "p1": matrix(&ricci.p1),
                        "p2": matrix(&ricci.p2),
                        "s_vv": matrix(&ricci.s_vv),
                        "r_hat": num(ricci.r_hat),
                        "s": num(ricci.s),
                        "total": num(ricci.total),
                    }),
                );
            }
            if m.einstein {
                let e = curvature::einstein_from_values(
                    &ricci,
                    &g,
                    &h,
                    self.cfg.einstein.kappa,
                    &EinsteinSources::vacuum(shape),
                );
                res.push(("einstein", e.max_abs, None));
                out.insert(
                    "einstein".into(),
                    json!({
                        "r_hat": num(ricci.r_hat),
                        "s": num(ricci.s),
                        "hh": matrix(&e.hh),
                        "vv": matrix(&e.vv),
                        "vh": matrix(&e.vh),
                        "hv": matrix(&e.hv),
                        "max_abs": num(e.max_abs),
                    }),
                );
            }
        }

        if m.spectral {
            let v = spectral::vielbein(src, u, VielbeinMethod::Cholesky)?;
            let gammas = GammaSet::new(d)?;
            let curved = spectral::gamma_frame(&gammas, &v)?;
            let geom0 = src.geometry(u, 0)?;
            let ginv = linalg::checked_inverse(&linalg::values(&geom0.block_metric()), "block metric")?;
            let clifford = spectral::anticommutator_residual(&curved, &(ginv * 2.0));
            let spin = spectral::spin_connection(src, sel, u)?;
            let dens = spectral::seeley_densities(src, sel, self.cfg.spectral.cutoff_scale, u)?;
            res.push(("clifford", clifford, Some(tol::CLIFFORD)));
            res.push(("spin_defining", spin.defining_residual, Some(tol::SPIN_DEFINING)));
            res.push(("spin_anti_hermiticity", spin.anti_hermiticity_residual(), Some(tol::SPIN_HERMITICITY)));
            let mut s = Map::new();
            s.insert("a0".into(), num(dens.a0));
            s.insert("a2".into(), num(dens.a2));
            if let Some(a4) = dens.a4 {
                s.insert("a4".into(), num(a4));
            }
            s.insert("scalar".into(), num(dens.scalar));
            s.insert("trace_identity".into(), num(dens.trace_identity));
            s.insert("frame_connection".into(), tensor(&spin.frame));
            out.insert("spectral".into(), Value::Object(s));
        }

        if m.finsler {
            if let Geometry::Finsler(fg) = self.geometry {
                let geom0 = src.geometry(u, 0)?;
                let mut f = Map::new();
                f.insert("g".into(), matrix(&linalg::values(&geom0.g)));
                f.insert("n_connection".into(), matrix(&linalg::values(&geom0.n)));
                if let Lagrangian::Finsler(func) = &fg.lagrangian {
                    let mp = finsler::finsler_metric(func, u)?;
                    let hom = func.homogeneity_residual(u)?;
                    res.push(("finsler_homogeneity", hom, Some(tol::HOMOGENEITY)));
                    f.insert("value".into(), num(func.value(u)?));
                    f.insert("rank".into(), json!(mp.rank));
                    f.insert("positive_definite".into(), json!(mp.positive_definite));
                }
                let closure = finsler::kahler_closure_for(&fg.lagrangian, u)?;
                res.push(("kahler_closure", closure, Some(tol::KAHLER)));
                f.insert("kahler_closure".into(), num(closure));
                out.insert("finsler".into(), Value::Object(f));
            }
        }

        Ok(PointOutput {
            value: Value::Object(out),
            residuals: res,
        })
    }
}

/// Runs every configured module at every point. Points are processed in
/// parallel and merged in input order, so the report does not depend on the
/// thread count.
pub fn run_report(cfg: &RunConfig) -> CliResult<Report> {
    let Prepared {
        geometry,
        selector,
        points,
    } = cfg.prepare()?;
    let sweep = Sweep {
        cfg,
        geometry: &geometry,
        selector: &selector,
    };
    let outcomes: Vec<dgeom_core::Result<PointOutput>> = points.par_iter().map(|u| sweep.point(u)).collect();
    let config = serde_json::to_value(cfg).expect("configs serialize");
    assemble(config, &points, outcomes, cfg.degenerate_fraction)
}
