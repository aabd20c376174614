//! `limit-curve`: boundary samples and control-line points for one pressure field.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use grip_core::contact::{limit_curve, LimitCurve, PressureField};
use grip_core::nalgebra::Vector2;
use serde::Serialize;

use crate::manifest::{self, RunManifest};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct WrenchPoint {
    pub force_n: f64,
    pub torque_nm: f64,
}

impl From<Vector2<f64>> for WrenchPoint {
    fn from(v: Vector2<f64>) -> Self {
        Self {
            force_n: v.x,
            torque_nm: v.y,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CurveSummary {
    pub manifest: String,
    pub mu: f64,
    pub normal_force_n: f64,
    pub radius_m: f64,
    /// Offset actually used after clamping to R/4.
    pub offset_m: f64,
    pub f_max_n: f64,
    pub a_n: WrenchPoint,
    pub d_i: WrenchPoint,
    pub b_n: WrenchPoint,
    /// Quadrature estimate of the torque at zero tangential load.
    pub c_i_nm: Option<f64>,
    pub samples: usize,
}

#[derive(Serialize)]
struct BoundaryRow {
    branch: &'static str,
    cor_x_m: f64,
    force_n: f64,
    torque_nm: f64,
}

fn write_boundary(curve: &LimitCurve, path: &Path, manifest_name: &str) -> Result<()> {
    let mut buf = format!("# manifest: {manifest_name}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for (branch, sign) in [("upper", 1.0), ("lower", -1.0)] {
            for (s, cor) in curve.samples.iter().zip(&curve.cor_positions_m) {
                w.serialize(BoundaryRow {
                    branch,
                    cor_x_m: sign * cor,
                    force_n: sign * s.x,
                    torque_nm: sign * s.y,
                })?;
            }
        }
        w.flush()?;
    }
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

pub fn run(
    mu: f64,
    normal_force_n: f64,
    radius_m: f64,
    offset_m: f64,
    samples: usize,
    out_dir: &Path,
) -> Result<CurveSummary> {
    let field =
        PressureField::with_cop(normal_force_n, Vector2::new(offset_m.abs(), 0.0), radius_m)?;
    let curve = limit_curve(&field, mu, samples)?;
    manifest::ensure_dir(out_dir)?;
    let csv_path = out_dir.join("limit_curve.csv");
    let json_path = out_dir.join("limit_curve.json");
    let sidecar = out_dir.join("limit_curve.manifest.json");
    let name = manifest::file_name(&sidecar);
    write_boundary(&curve, &csv_path, &name)?;
    let summary = CurveSummary {
        manifest: name,
        mu,
        normal_force_n,
        radius_m,
        offset_m: curve.offset_m,
        f_max_n: curve.f_max,
        a_n: curve.a_n.into(),
        d_i: curve.d_i.into(),
        b_n: curve.b_n.into(),
        c_i_nm: curve.c_i,
        samples: curve.samples.len(),
    };
    fs::write(&json_path, serde_json::to_string_pretty(&summary)? + "\n")
        .with_context(|| format!("writing {}", json_path.display()))?;
    let m = RunManifest::new(
        "limit-curve",
        serde_json::json!({
            "mu": mu,
            "normal_force_n": normal_force_n,
            "radius_m": radius_m,
            "offset_m": offset_m,
            "samples": samples,
        }),
    );
    m.finish(&sidecar, &[csv_path, PathBuf::from(&json_path)])?;
    Ok(summary)
}
