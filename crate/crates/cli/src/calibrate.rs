//! `calibrate` and `synth-dataset`: CoP correction fitting on CSV datasets.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use grip_core::nalgebra::Vector2;
use grip_core::sensing::{
    compute_cop, correct_cop, fit_cop_correction, mean_cop_error, CopCorrectionParams, PadGeometry,
};
use grip_core::sim::{synthetic_calibration_dataset, SensorDistortion};
use serde::{Deserialize, Serialize};

use crate::exit;
use crate::manifest::{self, RunManifest};

pub const HEADER: [&str; 6] = ["hole_x_m", "hole_y_m", "load_kg", "f1_N", "f2_N", "f3_N"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub hole_x_m: f64,
    pub hole_y_m: f64,
    pub load_kg: f64,
    #[serde(rename = "f1_N")]
    pub f1_n: f64,
    #[serde(rename = "f2_N")]
    pub f2_n: f64,
    #[serde(rename = "f3_N")]
    pub f3_n: f64,
}

impl DatasetRow {
    fn forces(&self) -> [f64; 3] {
        [self.f1_n, self.f2_n, self.f3_n]
    }

    fn all_finite(&self) -> bool {
        [
            self.hole_x_m,
            self.hole_y_m,
            self.load_kg,
            self.f1_n,
            self.f2_n,
            self.f3_n,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Parses a dataset, reporting the offending line on any error.
pub fn parse_dataset(bytes: &[u8]) -> Result<Vec<(u64, DatasetRow)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(bytes);
    let headers = rdr
        .headers()
        .map_err(|e| exit::input(format!("dataset header: {e}")))?
        .clone();
    if headers.is_empty() {
        return Err(exit::input("dataset is empty"));
    }
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(exit::input(format!(
            "line 1: expected header {}, found {}",
            HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            exit::input(format!("line {line}: {e}"))
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        let row: DatasetRow = rec
            .deserialize(Some(&headers))
            .map_err(|e| exit::input(format!("line {line}: {e}")))?;
        if !row.all_finite() {
            return Err(exit::input(format!("line {line}: non-finite value")));
        }
        rows.push((line, row));
    }
    if rows.is_empty() {
        return Err(exit::input("dataset has no samples"));
    }
    Ok(rows)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub manifest: String,
    pub geometry: PadGeometry,
    /// Coefficients of the correction; lengths in m.
    pub cop_correction: CopCorrectionParams,
    pub samples: usize,
    pub rank: usize,
    pub iterations: usize,
    pub mae_before_mm: f64,
    pub mae_after_mm: f64,
    /// Largest shift the fitted correction applies to any sample's raw CoP.
    pub max_correction_mm: f64,
}

pub fn calibrate(dataset: &Path, out: &Path, radius_m: f64) -> Result<CalibrationFile> {
    let bytes = manifest::read_input(dataset)?;
    let rows = parse_dataset(&bytes)?;
    let geometry = PadGeometry::with_radius(radius_m);
    geometry.validate()?;
    let mut pairs = Vec::with_capacity(rows.len());
    for (line, row) in &rows {
        let raw = compute_cop(row.forces(), &geometry)
            .map_err(|e| exit::input(format!("line {line}: {e}")))?;
        pairs.push((raw, Vector2::new(row.hole_x_m, row.hole_y_m)));
    }
    let fit = fit_cop_correction(&pairs, &geometry).context("fitting the CoP correction")?;
    if fit.underdetermined || !fit.params.is_finite() {
        return Err(exit::numerical(format!(
            "CoP correction is not identifiable from {} samples (rank {} of {})",
            pairs.len(),
            fit.rank,
            CopCorrectionParams::IDENTIFIABLE
        )));
    }
    let before = mean_cop_error(&pairs, &CopCorrectionParams::default(), &geometry);
    let after = mean_cop_error(&pairs, &fit.params, &geometry);
    let max_correction = pairs
        .iter()
        .map(|(raw, _)| (correct_cop(raw, &fit.params, &geometry) - raw).norm())
        .fold(0.0, f64::max);
    let sidecar = manifest::sidecar_path(out);
    let file = CalibrationFile {
        manifest: manifest::file_name(&sidecar),
        geometry,
        cop_correction: fit.params,
        samples: pairs.len(),
        rank: fit.rank,
        iterations: fit.iterations,
        mae_before_mm: before * 1e3,
        mae_after_mm: after * 1e3,
        max_correction_mm: max_correction * 1e3,
    };
    fs::write(out, serde_json::to_string_pretty(&file)? + "\n")
        .with_context(|| format!("writing {}", out.display()))?;
    let mut m = RunManifest::new("calibrate", serde_json::json!({ "radius_m": radius_m }));
    m.input(dataset)?;
    m.finish(&sidecar, &[out.to_path_buf()])?;
    Ok(file)
}

pub fn print_report(file: &CalibrationFile) {
    println!("samples: {}", file.samples);
    println!("CoP MAE before: {:.4} mm", file.mae_before_mm);
    println!("CoP MAE after:  {:.4} mm", file.mae_after_mm);
    println!("max correction: {:.4} mm", file.max_correction_mm);
    if file.mae_before_mm >= 1e-3 && file.mae_after_mm > 0.0 {
        println!(
            "improvement:    {:.2}x",
            file.mae_before_mm / file.mae_after_mm
        );
    }
}

pub fn synth_dataset(
    out: &Path,
    radius_m: f64,
    noise_sigma_n: f64,
    seed: u64,
    distorted: bool,
) -> Result<()> {
    let geometry = PadGeometry::with_radius(radius_m);
    let distortion = if distorted {
        SensorDistortion::CALIBRATION_STUDY
    } else {
        SensorDistortion {
            pull_to_nearest: 0.0,
        }
    };
    let samples = synthetic_calibration_dataset(&geometry, &distortion, noise_sigma_n, seed)?;
    let mut w =
        csv::Writer::from_path(out).with_context(|| format!("writing {}", out.display()))?;
    for s in samples {
        w.serialize(DatasetRow {
            hole_x_m: s.truth_m.x,
            hole_y_m: s.truth_m.y,
            load_kg: s.load_kg,
            f1_n: s.forces_n[0],
            f2_n: s.forces_n[1],
            f3_n: s.forces_n[2],
        })?;
    }
    w.flush()?;
    drop(w);
    let m = RunManifest::new(
        "synth-dataset",
        serde_json::json!({
            "radius_m": radius_m,
            "noise_sigma_n": noise_sigma_n,
            "seed": seed,
            "pull_to_nearest": distortion.pull_to_nearest,
        }),
    );
    m.finish(&manifest::sidecar_path(out), &[PathBuf::from(out)])
}
