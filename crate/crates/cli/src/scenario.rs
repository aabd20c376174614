//! Scenario loading plus the `preset`, `plan` and `simulate` subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use grip_core::planner::{certify, CertificationReport, Side, Trajectory};
use grip_core::sensing::PadGeometry;
use grip_core::sim::{run_experiment, ControllerMode, Scenario, Simulator, Summary};
use serde::Serialize;

use crate::exit;
use crate::manifest::{self, sha256_hex, RunManifest};

/// Where a scenario comes from and which fields to override.
#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Scenario JSON file.
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in experiment scenario (1-4) instead of a file.
    #[arg(long, value_name = "N")]
    pub preset: Option<u8>,
    #[arg(long, value_parser = parse_controller)]
    pub controller: Option<ControllerMode>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Friction coefficient of the box faces.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Pad radius; regenerates the default sensor layout at this size.
    #[arg(long = "radius-m")]
    pub radius_m: Option<f64>,
}

pub fn parse_controller(s: &str) -> std::result::Result<ControllerMode, String> {
    s.parse().map_err(|e: grip_core::GripError| e.to_string())
}

/// Effective scenario plus the input file it came from, if any.
pub struct Loaded {
    pub scenario: Scenario,
    pub source: Option<PathBuf>,
}

impl Loaded {
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(&serde_json::to_vec(&self.scenario)?))
    }

    fn manifest(&self, command: &str) -> Result<RunManifest> {
        let mut m = RunManifest::new(command, serde_json::to_value(&self.scenario)?);
        m.scenario_sha256 = Some(self.hash()?);
        if let Some(p) = &self.source {
            m.input(p)?;
        }
        Ok(m)
    }
}

pub fn load(args: &ScenarioArgs) -> Result<Loaded> {
    let (mut scenario, source) = match (&args.config, args.preset) {
        (Some(path), _) => {
            let bytes = manifest::read_input(path)?;
            let s: Scenario = serde_json::from_slice(&bytes)
                .map_err(|e| exit::input(format!("{}: {e}", path.display())))?;
            (s, Some(path.clone()))
        }
        (None, Some(n)) => (
            Scenario::preset(n, args.controller.unwrap_or(ControllerMode::Hybrid))
                .map_err(|e| exit::input(e.to_string()))?,
            None,
        ),
        (None, None) => return Err(exit::input("either --config or --preset is required")),
    };
    if let Some(c) = args.controller {
        scenario.controller = c;
    }
    if let Some(s) = args.seed {
        scenario.seed = s;
    }
    if let Some(mu) = args.mu {
        scenario.body.mu = mu;
    }
    if let Some(r) = args.radius_m {
        scenario.pad.geometry = PadGeometry::with_radius(r);
    }
    scenario
        .validate()
        .map_err(|e| exit::input(format!("invalid scenario: {e}")))?;
    Ok(Loaded { scenario, source })
}

pub fn write_preset(args: &ScenarioArgs, out: &Path) -> Result<()> {
    let loaded = load(args)?;
    fs::write(out, serde_json::to_string_pretty(&loaded.scenario)? + "\n")
        .with_context(|| format!("writing {}", out.display()))
}

#[derive(Debug, Serialize)]
pub struct TrajectoryFile {
    pub manifest: String,
    pub scenario_sha256: String,
    /// Pad separation held along the whole carry (m).
    pub delta_s_rel_m: f64,
    pub trajectory: Trajectory,
    pub certification: CertificationReport,
}

pub fn plan(args: &ScenarioArgs, out: &Path) -> Result<TrajectoryFile> {
    let loaded = load(args)?;
    let s = &loaded.scenario;
    let mut sim = Simulator::new(s.clone())?;
    sim.grip().context("closing the grip")?;
    let trajectory = sim.plan_carry().context("planning the carry")?;
    let q0 = trajectory.nodes[0];
    let delta = s.arm.pad_pose(&q0, Side::Left).position_m.x
        - s.arm.pad_pose(&q0, Side::Right).position_m.x;
    let certification = certify(&trajectory, &s.arm, &s.planner, delta);
    let sidecar = manifest::sidecar_path(out);
    let file = TrajectoryFile {
        manifest: manifest::file_name(&sidecar),
        scenario_sha256: loaded.hash()?,
        delta_s_rel_m: delta,
        trajectory,
        certification,
    };
    fs::write(out, serde_json::to_string_pretty(&file)? + "\n")
        .with_context(|| format!("writing {}", out.display()))?;
    loaded
        .manifest("plan")?
        .finish(&sidecar, &[out.to_path_buf()])?;
    if !file.certification.passed {
        return Err(exit::numerical(format!(
            "trajectory failed certification: {}",
            file.certification.summary()
        )));
    }
    Ok(file)
}

#[derive(Debug, Serialize)]
pub struct SummaryFile {
    pub manifest: String,
    pub scenario_sha256: String,
    #[serde(flatten)]
    pub summary: Summary,
}

pub const TRACE_FILE: &str = "trace.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SCENARIO_FILE: &str = "scenario.json";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn simulate(args: &ScenarioArgs, out_dir: &Path) -> Result<SummaryFile> {
    let loaded = load(args)?;
    let hash = loaded.hash()?;
    let trace = run_experiment(&loaded.scenario).context("running the simulation")?;
    manifest::ensure_dir(out_dir)?;

    let trace_path = out_dir.join(TRACE_FILE);
    let mut buf = format!("# manifest: {MANIFEST_FILE} scenario_sha256: {hash}\n").into_bytes();
    trace.write_csv(&mut buf)?;
    fs::write(&trace_path, buf).with_context(|| format!("writing {}", trace_path.display()))?;

    let summary_path = out_dir.join(SUMMARY_FILE);
    let summary = SummaryFile {
        manifest: MANIFEST_FILE.to_string(),
        scenario_sha256: hash,
        summary: Summary::from_trace(&loaded.scenario, &trace),
    };
    fs::write(
        &summary_path,
        serde_json::to_string_pretty(&summary)? + "\n",
    )
    .with_context(|| format!("writing {}", summary_path.display()))?;

    let scenario_path = out_dir.join(SCENARIO_FILE);
    fs::write(
        &scenario_path,
        serde_json::to_string_pretty(&loaded.scenario)? + "\n",
    )
    .with_context(|| format!("writing {}", scenario_path.display()))?;

    loaded.manifest("simulate")?.finish(
        &out_dir.join(MANIFEST_FILE),
        &[trace_path, summary_path, scenario_path],
    )?;
    Ok(summary)
}
