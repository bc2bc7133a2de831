use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_secure-uav"))
        .args(args)
        .env_remove("SECURE_UAV_WORKERS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("mission.toml");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL: &str = "n_slots = 24\nd_step_max = 0.45\n";

#[test]
fn run_writes_artifacts_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = bin(&["run", "--config", &cfg, "--scheme", "gjt", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["slots.csv", "summary.json", "trace.csv"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let summary = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"scheme\": \"gjt\""), "{summary}");
}

#[test]
fn baseline_flag_skips_optimization() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = bin(&["run", "--config", &cfg, "--out", out.to_str().unwrap(), "--baseline"]);
    assert_eq!(o.status.code(), Some(0));
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 2, "{trace}");
}

#[test]
fn unknown_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n_slot = 10\n");
    let o = bin(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_slot"));
}

#[test]
fn unreachable_harvest_target_names_the_feasibility_radius() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "psi_h_dbm = 0.0\n");
    let o = bin(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("feasibility radius"), "{err}");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn hitting_max_iters_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}epsilon = 1e-300\nmax_iters = 1\nscheme = \"fuj\"\n"));
    let out = dir.path().join("out");
    let o = bin(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("summary.json").is_file());
}

#[test]
fn sweep_writes_one_row_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("sweep");
    let o = bin(&[
        "sweep", "--config", &cfg, "--param", "eve_radius", "--values", "0.2,0.4", "--schemes", "fuj,woj", "--workers",
        "2", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("eve_radius,scheme,"), "{csv}");
    assert_eq!(lines.len(), 5);
}

#[test]
fn bad_sweep_parameter_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["sweep", "--param", "altitude", "--values", "1", "--out", dir.path().to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
}
