use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_optotunnel"));
    cmd.env("NO_COLOR", "1");
    cmd
}

fn run(args: &[&str], config: Option<&Value>, dir: &Path) -> Output {
    let mut cmd = bin();
    cmd.args(args).arg("--out").arg(dir.join("out"));
    if let Some(c) = config {
        let path = dir.join("config.json");
        std::fs::write(&path, serde_json::to_string_pretty(c).unwrap()).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn read_json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn system() -> Value {
    json!({"g2": -2e-4, "eta": 176.785, "delta_c": 0.0, "kappa": 10.0})
}

fn quick_dynamics(n_pulses: usize) -> Value {
    json!({
        "system": system(),
        "grid": {"spacing": 0.08},
        "measurement": {
            "sigma": 50.0,
            "n_pulses": n_pulses,
            "pulses_per_inverse_j": 20.0,
            "seed": 3,
            "time_step": 0.1
        }
    })
}

#[test]
fn nonpositive_kappa_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"system": {"g2": -2e-4, "eta": 176.785, "delta_c": 0.0, "kappa": 0.0}});
    let out = run(&["potential"], Some(&cfg), dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("kappa"), "{err}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_keys_and_bad_flags_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"system": system(), "colour": "red"});
    assert_eq!(run(&["potential"], Some(&cfg), dir.path()).status.code(), Some(1));
    let out = bin().args(["potential", "--format", "png"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = bin().args(["potential", "--config", "/nonexistent/c.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn potential_reports_geometry_and_levels() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["potential"], Some(&json!({"system": system()})), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(dir.path().join("out/potential.json"));
    let x_min = v["geometry"]["x_min"].as_f64().unwrap();
    let eb = v["geometry"]["barrier_height"].as_f64().unwrap();
    assert!((x_min - 15.567).abs() < 1e-3, "{x_min}");
    assert!((eb - 0.0075896).abs() < 1e-6, "{eb}");
    assert!(v["geometry"]["discriminant"].as_f64().unwrap() > 0.0);
    let l = &v["levels"];
    let j = l["tunneling"].as_f64().unwrap();
    assert!((l["e1"].as_f64().unwrap() + 0.0013524).abs() < 1e-6);
    assert!((l["e2"].as_f64().unwrap() - 0.0022566).abs() < 1e-6);
    assert!((j - 0.003609).abs() < 1e-5);
    for name in ["potential.csv", "potential.svg"] {
        assert!(dir.path().join("out").join(name).exists(), "{name}");
    }
    let csv = std::fs::read_to_string(dir.path().join("out/potential.csv")).unwrap();
    assert!(csv.starts_with("x,U,intensity\n"));
}

#[test]
fn zero_pump_is_a_single_well() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"system": {"g2": -2e-4, "eta": 0.0, "delta_c": 0.0, "kappa": 10.0}});
    let out = run(&["potential", "--format", "json"], Some(&cfg), dir.path());
    assert!(out.status.success());
    let v = read_json(dir.path().join("out/potential.json"));
    assert_eq!(v["geometry"]["is_double_well"], json!(false));
    assert!(v["geometry"]["x_min"].is_null());
    assert!(v.get("levels").is_none());
    assert!(!dir.path().join("out/potential.csv").exists());

    let out = run(&["trajectory"], Some(&cfg), dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn one_value_sweep_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"system": system(), "sweep": {"field": "eta", "values": [176.785]}});
    let out = run(&["sweep", "--format", "csv"], Some(&cfg), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "swept,D,x_min,E_b,E_ground,ratio,J,J_flag");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].ends_with(",ok"), "{}", lines[1]);
}

#[test]
fn non_monotone_sweep_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"system": system(), "sweep": {"field": "eta", "values": [176.8, 176.78, 176.9]}});
    assert_eq!(run(&["sweep"], Some(&cfg), dir.path()).status.code(), Some(1));
    assert!(!dir.path().join("out/sweep.csv").exists());
}

#[test]
fn spectrum_writes_requested_states() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({"system": system(), "spectrum": {"n_states": 3}});
    let out = run(&["spectrum"], Some(&cfg), dir.path());
    assert!(out.status.success());
    let v = read_json(dir.path().join("out/spectrum.json"));
    assert_eq!(v["energies"].as_array().unwrap().len(), 3);
    let csv = std::fs::read_to_string(dir.path().join("out/states.csv")).unwrap();
    assert!(csv.starts_with("x,psi_1,psi_2,psi_3\n"));
}

#[test]
fn trajectory_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_dynamics(4);
    let first = run(&["trajectory"], Some(&cfg), dir.path());
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let a = std::fs::read(dir.path().join("out/trajectory.csv")).unwrap();
    let aj = std::fs::read(dir.path().join("out/trajectory.json")).unwrap();
    assert_eq!(String::from_utf8_lossy(&a).lines().count(), 5);
    assert!(run(&["trajectory", "--threads", "1"], Some(&cfg), dir.path()).status.success());
    assert_eq!(a, std::fs::read(dir.path().join("out/trajectory.csv")).unwrap());
    assert_eq!(aj, std::fs::read(dir.path().join("out/trajectory.json")).unwrap());

    // The seed flag overrides the file.
    assert!(run(&["trajectory", "--seed", "99"], Some(&cfg), dir.path()).status.success());
    assert_ne!(a, std::fs::read(dir.path().join("out/trajectory.csv")).unwrap());
}

#[test]
fn zero_pulses_give_reference_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["trajectory"], Some(&quick_dynamics(0)), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let traj = std::fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    assert_eq!(traj, "t,x_res,mean_x,energy\n");
    let reference = std::fs::read_to_string(dir.path().join("out/reference.csv")).unwrap();
    assert!(reference.lines().count() > 100);
    // Coherent evolution over half a period carries the mean across the barrier.
    let last = reference.lines().last().unwrap();
    let first = reference.lines().nth(1).unwrap();
    let mean = |l: &str| l.split(',').nth(1).unwrap().parse::<f64>().unwrap();
    assert!(mean(first) * mean(last) < 0.0, "{first} / {last}");
}

#[test]
fn small_ensemble_histogram_counts_selected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_dynamics(3);
    cfg["ensemble"] = json!({"n_traj": 6, "post_select": "left", "bins": 8});
    let out = run(&["ensemble"], Some(&cfg), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(dir.path().join("out/ensemble.json"));
    let selected = v["stats"]["n_selected"].as_u64().unwrap();
    assert_eq!(v["stats"]["n_traj"].as_u64(), Some(6));
    let csv = std::fs::read_to_string(dir.path().join("out/histogram.csv")).unwrap();
    let total: u64 = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, selected);
    assert_eq!(csv.lines().count(), 9);
    // Fewer than ten selected trajectories always carries a warning.
    assert!(v["stats"]["warning"].is_string());
}

#[test]
fn single_trajectory_ensemble_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_dynamics(2);
    cfg["ensemble"] = json!({"n_traj": 1});
    let out = run(&["ensemble", "--format", "json"], Some(&cfg), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(dir.path().join("out/ensemble.json"));
    assert_eq!(v["stats"]["n_selected"].as_u64(), Some(1));
}

#[test]
fn zeno_scan_writes_one_row_per_multiplier() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_dynamics(1);
    cfg["zeno"] = json!({"multipliers": [1, 2], "n_traj": 4});
    let out = run(&["zeno", "--format", "csv,json"], Some(&cfg), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/zeno.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(!dir.path().join("out/zeno.svg").exists());
    let v = read_json(dir.path().join("out/zeno.json"));
    for row in v["rows"].as_array().unwrap() {
        let f = row["crossing_fraction"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&f));
    }
}

#[test]
fn bundled_configs_are_accepted() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["fig2", "fig3", "fig4", "fig5"] {
        let dir = tempfile::tempdir().unwrap();
        let path = configs.join(format!("{name}.json"));
        let out = bin()
            .args(["potential", "--format", "json", "--config"])
            .arg(&path)
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
        let v = read_json(dir.path().join("potential.json"));
        assert_eq!(v["system"]["eta"].as_f64(), Some(176.785), "{name}");
    }
}

#[test]
fn barrier_ramp_reports_fidelity() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = quick_dynamics(1);
    cfg["preparation"] = json!({"ramp": {"eta_start": 170.0, "duration": 2000.0, "shape": "smoothstep", "time_step": 0.1}});
    let out = run(&["trajectory", "--format", "json"], Some(&cfg), dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v = read_json(dir.path().join("out/trajectory.json"));
    let f = v["physics"]["ramp"]["adiabaticity"].as_f64().unwrap();
    assert!(f > 0.0 && f <= 1.0 + 1e-12, "{f}");

    // A sudden ramp leaves too much energy for any pulse to localize the state.
    cfg["preparation"]["ramp"]["duration"] = json!(200.0);
    cfg["preparation"]["ramp"]["shape"] = json!("linear");
    let out = run(&["trajectory", "--format", "json"], Some(&cfg), dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("localizing preparation failed"));
}
