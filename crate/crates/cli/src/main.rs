//! `grip`: calibration, limit curves, planning, simulation and reporting.
//!
//! Exit codes: 0 success, 2 input error, 3 numerical failure, 4 simulation
//! integrity violation, 1 anything else.

mod calibrate;
mod exit;
mod limit;
mod manifest;
mod report;
mod scenario;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use grip_core::control::ControllerGains;

use scenario::ScenarioArgs;

#[derive(Debug, Parser)]
#[command(
    name = "grip",
    version,
    about = "Two-pad gripping: sensing calibration, contact limits, planning and simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the CoP correction to a calibration dataset CSV.
    Calibrate {
        /// Dataset CSV (hole_x_m, hole_y_m, load_kg, f1_N, f2_N, f3_N).
        #[arg(long, value_name = "CSV")]
        dataset: PathBuf,
        /// Calibration JSON to write.
        #[arg(long, value_name = "JSON")]
        out: PathBuf,
        #[arg(long = "radius-m", default_value_t = 0.03)]
        radius_m: f64,
    },
    /// Write a synthetic calibration dataset CSV.
    SynthDataset {
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "radius-m", default_value_t = 0.03)]
        radius_m: f64,
        /// Standard deviation of the sensor noise (N).
        #[arg(long = "noise-sigma-n", default_value_t = 0.01)]
        noise_sigma_n: f64,
        /// Leave the readings undistorted, as if already calibrated.
        #[arg(long)]
        no_distortion: bool,
    },
    /// Sample the limit curve of a linear pressure field.
    LimitCurve {
        #[arg(long, default_value_t = 0.5)]
        mu: f64,
        #[arg(long = "normal-force-n", default_value_t = 2.0)]
        normal_force_n: f64,
        #[arg(long = "radius-m", default_value_t = 0.03)]
        radius_m: f64,
        /// CoP distance from the pad centre; clamped to R/4.
        #[arg(long = "offset-m", default_value_t = 0.0)]
        offset_m: f64,
        /// Number of CoR positions (at least 32).
        #[arg(long, default_value_t = 256)]
        samples: usize,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Write a scenario JSON, usually a preset with overrides applied.
    Preset {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_name = "JSON")]
        out: PathBuf,
    },
    /// Grip the box and plan the carry; writes the trajectory JSON.
    Plan {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_name = "JSON")]
        out: PathBuf,
    },
    /// Run a scenario; writes trace CSV, summary JSON and manifest.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output directory.
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Compare traces; prints a table and writes a gnuplot data file.
    Report {
        #[arg(required = true, value_name = "TRACE")]
        traces: Vec<PathBuf>,
        #[arg(long, value_name = "DAT", default_value = "report.dat")]
        out: PathBuf,
        /// Mean force above which a tick counts as in contact (N).
        #[arg(long = "contact-threshold-n", default_value_t = ControllerGains::default().contact_threshold_n)]
        contact_threshold_n: f64,
    },
}

fn run(cli: Cli) -> Result<()> {
    log::debug!("{:?}", cli.command);
    match cli.command {
        Command::Calibrate {
            dataset,
            out,
            radius_m,
        } => {
            let file = calibrate::calibrate(&dataset, &out, radius_m)?;
            calibrate::print_report(&file);
        }
        Command::SynthDataset {
            out,
            seed,
            radius_m,
            noise_sigma_n,
            no_distortion,
        } => {
            calibrate::synth_dataset(&out, radius_m, noise_sigma_n, seed, !no_distortion)?;
        }
        Command::LimitCurve {
            mu,
            normal_force_n,
            radius_m,
            offset_m,
            samples,
            out,
        } => {
            let summary = limit::run(mu, normal_force_n, radius_m, offset_m, samples, &out)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Preset { scenario, out } => scenario::write_preset(&scenario, &out)?,
        Command::Plan { scenario, out } => {
            let file = scenario::plan(&scenario, &out)?;
            println!("nodes: {}", file.trajectory.len());
            println!("certification: {}", file.certification.summary());
        }
        Command::Simulate { scenario, out } => {
            let file = scenario::simulate(&scenario, &out)?;
            println!("{}", serde_json::to_string_pretty(&file.summary)?);
        }
        Command::Report {
            traces,
            out,
            contact_threshold_n,
        } => {
            let rows = report::run(&traces, &out, contact_threshold_n)?;
            print!("{}", report::table(&rows));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GRIP_LOG_LEVEL", "warn"))
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::INPUT } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code_for(&e))
        }
    }
}
