//! `report`: side-by-side metrics for several trace files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use grip_core::sim::{SimTrace, TraceStats};

use crate::exit;
use crate::manifest::{self, RunManifest};

#[derive(Debug, Clone)]
pub struct ReportRow {
    pub label: String,
    pub stats: TraceStats,
}

fn first_data_line(text: &str) -> Option<&str> {
    text.lines().find(|l| !l.starts_with('#'))
}

pub fn load_trace(path: &Path, contact_threshold_n: f64) -> Result<ReportRow> {
    let bytes = manifest::read_input(path)?;
    let text = String::from_utf8(bytes)
        .map_err(|_| exit::input(format!("{}: not UTF-8", path.display())))?;
    let header = first_data_line(&text).unwrap_or_default();
    let expected = SimTrace::csv_header();
    if header != expected {
        return Err(exit::input(format!(
            "{}: schema mismatch; expected header `{expected}`",
            path.display()
        )));
    }
    let rows = SimTrace::read_csv(text.as_bytes())
        .map_err(|e| exit::input(format!("{}: {e}", path.display())))?;
    Ok(ReportRow {
        label: path.display().to_string(),
        stats: TraceStats::from_rows(&rows, contact_threshold_n),
    })
}

pub fn table(rows: &[ReportRow]) -> String {
    let width = rows.iter().map(|r| r.label.len()).max().unwrap_or(0).max(5);
    let mut s = format!(
        "{:<width$}  {:>12}  {:>12}  {:>14}  {:>6}\n",
        "trace", "settling_s", "force_mae_n", "max_cop_mm", "slips"
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{:<width$}  {:>12.4}  {:>12.4}  {:>14.4}  {:>6}",
            r.label,
            r.stats.settling_time_s,
            r.stats.force_mae_n,
            r.stats.max_cop_distance_mm,
            r.stats.slip_events
        );
    }
    s
}

/// Whitespace-separated columns with a commented header, readable by gnuplot.
pub fn gnuplot_data(rows: &[ReportRow], manifest_name: &str) -> String {
    let mut s = format!("# manifest: {manifest_name}\n");
    s.push_str("# index label settling_time_s force_mae_n max_cop_distance_mm slip_events\n");
    for (i, r) in rows.iter().enumerate() {
        let _ = writeln!(
            s,
            "{i} \"{}\" {} {} {} {}",
            r.label.replace('"', "'"),
            r.stats.settling_time_s,
            r.stats.force_mae_n,
            r.stats.max_cop_distance_mm,
            r.stats.slip_events
        );
    }
    s
}

pub fn run(traces: &[PathBuf], out: &Path, contact_threshold_n: f64) -> Result<Vec<ReportRow>> {
    if traces.is_empty() {
        return Err(exit::input("report needs at least one trace"));
    }
    let rows = traces
        .iter()
        .map(|p| load_trace(p, contact_threshold_n))
        .collect::<Result<Vec<_>>>()?;
    let sidecar = manifest::sidecar_path(out);
    fs::write(out, gnuplot_data(&rows, &manifest::file_name(&sidecar)))
        .with_context(|| format!("writing {}", out.display()))?;
    let mut m = RunManifest::new(
        "report",
        serde_json::json!({ "contact_threshold_n": contact_threshold_n }),
    );
    for p in traces {
        m.input(p)?;
    }
    m.finish(&sidecar, &[out.to_path_buf()])?;
    Ok(rows)
}
