use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn grip(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grip"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn grip")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&std::fs::read(path).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn calibrate_synthetic_dataset_improves_fourfold() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(
        code(&grip(
            &["synth-dataset", "--out", "ds.csv", "--seed", "5"],
            d
        )),
        0
    );
    let o = grip(
        &["calibrate", "--dataset", "ds.csv", "--out", "cal.json"],
        d,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cal = json(&d.join("cal.json"));
    let before = cal["mae_before_mm"].as_f64().unwrap();
    let after = cal["mae_after_mm"].as_f64().unwrap();
    assert!(before >= 4.0 * after, "{before} -> {after}");
    assert!(stdout(&o).contains(&format!("CoP MAE before: {before:.4} mm")));
    assert_eq!(cal["manifest"], "cal.manifest.json");
    let m = json(&d.join("cal.manifest.json"));
    assert_eq!(m["command"], "calibrate");
    assert_eq!(m["outputs"][0]["path"], "cal.json");
}

#[test]
fn calibrate_already_calibrated_data_needs_no_correction() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let o = grip(
        &[
            "synth-dataset",
            "--out",
            "ds.csv",
            "--no-distortion",
            "--noise-sigma-n",
            "0",
        ],
        d,
    );
    assert_eq!(code(&o), 0);
    assert_eq!(
        code(&grip(
            &["calibrate", "--dataset", "ds.csv", "--out", "cal.json"],
            d
        )),
        0
    );
    let cal = json(&d.join("cal.json"));
    assert!(cal["max_correction_mm"].as_f64().unwrap() < 1e-6);
}

#[test]
fn calibrate_input_errors() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    std::fs::write(d.join("empty.csv"), "").unwrap();
    assert_eq!(
        code(&grip(
            &["calibrate", "--dataset", "empty.csv", "--out", "c.json"],
            d
        )),
        2
    );
    std::fs::write(
        d.join("bad.csv"),
        "hole_x_m,hole_y_m,load_kg,f1_N,f2_N,f3_N\n0,0,0.2,1,1,1\n0,0,0.2,1,x,1\n",
    )
    .unwrap();
    let o = grip(&["calibrate", "--dataset", "bad.csv", "--out", "c.json"], d);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    assert_eq!(
        code(&grip(
            &["calibrate", "--dataset", "missing.csv", "--out", "c.json"],
            d
        )),
        2
    );
    // a handful of samples cannot pin down the correction
    std::fs::write(
        d.join("few.csv"),
        "hole_x_m,hole_y_m,load_kg,f1_N,f2_N,f3_N\n0,0,0.2,1,1,1\n0.001,0,0.2,1.1,0.9,1\n",
    )
    .unwrap();
    assert_eq!(
        code(&grip(
            &["calibrate", "--dataset", "few.csv", "--out", "c.json"],
            d
        )),
        3
    );
}

#[test]
fn limit_curve_outputs() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let o = grip(
        &[
            "limit-curve",
            "--mu",
            "0.5",
            "--normal-force-n",
            "2",
            "--radius-m",
            "0.03",
            "--samples",
            "64",
            "--out",
            "lc",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let block: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let b_n = block["b_n"]["torque_nm"].as_f64().unwrap();
    assert!((b_n - 2.0 * 0.5 * 2.0 * 0.03 / 3.0).abs() < 1e-12);
    let csv = std::fs::read_to_string(d.join("lc/limit_curve.csv")).unwrap();
    assert!(csv
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("branch,cor_x_m,force_n,torque_nm"));
    assert_eq!(
        code(&grip(&["limit-curve", "--samples", "4", "--out", "lc2"], d)),
        2
    );
}

#[test]
fn simulate_experiment_one_keeps_cop_within_threshold() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let o = grip(&["simulate", "--preset", "1", "--out", "run"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = json(&d.join("run/summary.json"));
    assert!(s["max_cop_distance_mm"].as_f64().unwrap() <= 10.0);
    assert_eq!(s["manifest"], "manifest.json");
    let m = json(&d.join("run/manifest.json"));
    assert_eq!(m["scenario_sha256"], s["scenario_sha256"]);
    assert_eq!(m["parameters"]["gains"]["k_c"], 0.5);
    let trace = std::fs::read_to_string(d.join("run/trace.csv")).unwrap();
    assert!(trace.starts_with("# manifest: manifest.json"));
}

#[test]
fn simulate_tilted_faces_force_only_slips() {
    let dir = TempDir::new().unwrap();
    let o = grip(
        &[
            "simulate",
            "--preset",
            "4",
            "--controller",
            "force-only",
            "--out",
            "run",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = json(&dir.path().join("run/summary.json"));
    assert!(s["slip_events"].as_u64().unwrap() > 0);
    assert_eq!(s["controller"], "force-only");
}

#[test]
fn simulate_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    for out in ["a", "b"] {
        assert_eq!(
            code(&grip(
                &["simulate", "--preset", "2", "--seed", "11", "--out", out],
                d
            )),
            0
        );
    }
    let a = std::fs::read(d.join("a/trace.csv")).unwrap();
    let b = std::fs::read(d.join("b/trace.csv")).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        std::fs::read(d.join("a/summary.json")).unwrap(),
        std::fs::read(d.join("b/summary.json")).unwrap()
    );
}

#[test]
fn simulate_error_codes() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    assert_eq!(
        code(&grip(&["preset", "--preset", "1", "--out", "p.json"], d)),
        0
    );
    let base = json(&d.join("p.json"));

    let mut bad = base.clone();
    bad["box"]["mass_kg"] = (-1.0).into();
    std::fs::write(d.join("bad.json"), bad.to_string()).unwrap();
    assert_eq!(
        code(&grip(
            &["simulate", "--config", "bad.json", "--out", "r"],
            d
        )),
        2
    );

    std::fs::write(d.join("garbled.json"), "{ not json").unwrap();
    assert_eq!(
        code(&grip(
            &["simulate", "--config", "garbled.json", "--out", "r"],
            d
        )),
        2
    );

    // a pad too soft to carry the grip force without bottoming out
    let mut soft = base.clone();
    soft["pad"]["contact_stiffness_n_per_m"] = 100.0.into();
    std::fs::write(d.join("soft.json"), soft.to_string()).unwrap();
    assert_eq!(
        code(&grip(
            &["simulate", "--config", "soft.json", "--out", "r"],
            d
        )),
        4
    );

    assert_eq!(
        code(&grip(&["simulate", "--preset", "7", "--out", "r"], d)),
        2
    );
    assert_eq!(code(&grip(&["simulate", "--out", "r"], d)), 2);
}

#[test]
fn overrides_reach_the_effective_scenario() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let o = grip(
        &[
            "preset",
            "--preset",
            "3",
            "--controller",
            "force-only",
            "--seed",
            "9",
            "--mu",
            "0.7",
            "--radius-m",
            "0.025",
            "--out",
            "p.json",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = json(&d.join("p.json"));
    assert_eq!(s["controller"], "force-only");
    assert_eq!(s["seed"], 9);
    assert_eq!(s["box"]["mu"], 0.7);
    assert_eq!(s["pad"]["geometry"]["radius_m"], 0.025);
}

#[test]
fn plan_writes_certified_trajectory() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let o = grip(&["plan", "--preset", "1", "--out", "traj.json"], d);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let t = json(&d.join("traj.json"));
    assert_eq!(t["certification"]["passed"], true);
    let nodes = t["trajectory"]["nodes"].as_array().unwrap().len();
    assert_eq!(
        t["trajectory"]["controls"].as_array().unwrap().len(),
        nodes - 1
    );
    assert!(d.join("traj.manifest.json").exists());
}

#[test]
fn report_compares_experiment_three_controllers() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    for c in ["force-only", "hybrid"] {
        let o = grip(
            &["simulate", "--preset", "3", "--controller", c, "--out", c],
            d,
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let o = grip(
        &[
            "report",
            "force-only/trace.csv",
            "hybrid/trace.csv",
            "--out",
            "cmp.dat",
        ],
        d,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = stdout(&o);
    let slips: Vec<u64> = table
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().last().unwrap().parse().unwrap())
        .collect();
    assert_eq!(slips.len(), 2);
    assert!(slips[1] < slips[0], "{table}");
    let dat = std::fs::read_to_string(d.join("cmp.dat")).unwrap();
    assert_eq!(dat.lines().filter(|l| !l.starts_with('#')).count(), 2);

    let single = grip(&["report", "hybrid/trace.csv", "--out", "one.dat"], d);
    assert_eq!(code(&single), 0);
    assert_eq!(stdout(&single).lines().count(), 2);

    let text = std::fs::read_to_string(d.join("hybrid/trace.csv")).unwrap();
    std::fs::write(
        d.join("other.csv"),
        text.replace("force_left_n", "force_l_n"),
    )
    .unwrap();
    let mixed = grip(&["report", "hybrid/trace.csv", "other.csv"], d);
    assert_eq!(code(&mixed), 2);
    assert!(stderr(&mixed).contains("schema mismatch"));
}

#[test]
fn shipped_scenarios_match_presets() {
    use grip_core::sim::{ControllerMode, Scenario};
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    for exp in 1..=4u8 {
        let preset = Scenario::preset(exp, ControllerMode::Hybrid).unwrap();
        let path = dir.join(format!("{}.json", preset.name));
        let file: Scenario = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
        assert_eq!(file, preset, "{}", path.display());
    }
}
