//! The `rvml` binary end to end: exit codes, report files and overrides.

use std::path::Path;
use std::process::{Command, Output};

use rvml::harness::{RunReport, DEFAULTS_JSON};

fn rvml(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rvml"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("RVML_OUT_DIR")
        .env_remove("RVML_THREADS")
        .output()
        .expect("spawn rvml")
}

fn read_report(dir: &Path, command: &str) -> RunReport {
    let text = std::fs::read_to_string(dir.join(format!("report-{command}.json"))).expect("report file");
    serde_json::from_str(&text).expect("report parses")
}

fn write_config(dir: &Path, edit: impl FnOnce(&mut serde_json::Value)) -> std::path::PathBuf {
    let mut v: serde_json::Value = serde_json::from_str(DEFAULTS_JSON).unwrap();
    edit(&mut v);
    let path = dir.join("config.json");
    std::fs::write(&path, v.to_string()).unwrap();
    path
}

#[test]
fn constants_pass_and_write_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = rvml(&["constants"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = read_report(dir.path(), "constants");
    assert!(report.passed);
    assert_eq!(report.command, "constants");
    assert_eq!(report.sections.len(), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 check(s) failed"));
}

#[test]
fn momentfn_json_output_matches_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = rvml(&["momentfn", "--json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let printed: RunReport = serde_json::from_slice(&out.stdout).unwrap();
    let stored = read_report(dir.path(), "momentfn");
    assert_eq!(printed, stored);
    let names: Vec<_> = stored.sections.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, ["moment-tables", "moment-functions"]);
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |v| v["operator"]["n_per_axes"] = 12.into());
    let out = rvml(&["constants", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("operator") && err.contains("n_per_axes"), "{err}");
}

#[test]
fn invalid_override_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = rvml(&["momentfn", "--tol", "2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = Command::new(env!("CARGO_BIN_EXE_rvml"))
        .args(["constants", "--out-dir"])
        .arg(dir.path())
        .env("RVML_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("RVML_THREADS"));
}

#[test]
fn failed_check_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // The K2 quadrature error bound is small but never exactly zero.
    let cfg = write_config(dir.path(), |v| v["tolerances"]["bessel"] = 1e-300.into());
    let out = rvml(&["constants", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let report = read_report(dir.path(), "constants");
    assert!(!report.passed);
    assert!(report.failed_checks().all(|c| c.name.starts_with("K2(")));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn same_seed_same_report() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(
        rvml(&["kernel-check", "--threads", "1"], a.path()).status.code(),
        rvml(&["kernel-check", "--threads", "2"], b.path()).status.code()
    );
    let strip = |r: RunReport| {
        let mut r = r.without_timings();
        r.config.threads = 0;
        r.config.out_dir = "".into();
        r
    };
    assert_eq!(
        strip(read_report(a.path(), "kernel-check")),
        strip(read_report(b.path(), "kernel-check"))
    );
}

#[test]
fn seed_changes_random_samples() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    rvml(&["kernel-check", "--seed", "1"], a.path());
    rvml(&["kernel-check", "--seed", "2"], b.path());
    let value = |d: &Path| {
        read_report(d, "kernel-check")
            .check("rotational covariance of Phi, relative")
            .unwrap()
            .value
    };
    assert_ne!(value(a.path()), value(b.path()));
}

#[test]
fn billiard_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let out = rvml(
        &["billiard", "--domain", "ball", "--n", "20", "--reflections", "50"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report = read_report(dir.path(), "billiard");
    assert_eq!(report.sections.len(), 1);
    assert_eq!(report.sections[0].name, "billiard-ball");
    assert_eq!(report.config.billiard.particles, 20);
    assert!(dir.path().join("billiard-ball.json").exists());
    assert_eq!(
        rvml(&["billiard", "--domain", "torus"], dir.path()).status.code(),
        Some(2)
    );
}
