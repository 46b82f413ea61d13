//! Exit codes and outputs of the `mbo` binary.

use std::process::Command;

fn mbo(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_mbo")).args(args).output().expect("binary runs")
}

#[test]
fn verify_passes_and_lists_every_suite() {
    let dir = tempfile::tempdir().unwrap();
    let out = mbo(&["verify", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8(out.stdout).unwrap();
    for suite in ["gaussian_integrals", "gronwall_round_trip", "offset_sphere", "kernel_mass", "heat_residual_fd", "decomposition"] {
        assert!(stdout.contains(suite), "{suite} missing");
    }
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
}

#[test]
fn converge_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = mbo(&["converge", "--out", dir.path().to_str().unwrap(), "--seed", "7"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("consistency.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(dir.path().join("consistency.json").exists());
}

#[test]
fn missing_config_fails() {
    let out = mbo(&["run", "--config", "/nonexistent/config.json"]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}

#[test]
fn short_h_ladder_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("two.json");
    std::fs::write(&path, r#"{"study": "consistency", "h_values": [1e-3, 1e-4]}"#).unwrap();
    let out = mbo(&["converge", "--config", path.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least 3"));
}

#[test]
fn failing_gate_gives_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("strict.json");
    std::fs::write(&path, r#"{"study": "consistency", "gates": {"min_slope": 3.0}}"#).unwrap();
    let out = mbo(&["run", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn oracle_reports_extinction() {
    let out = mbo(&["oracle", "--r0", "0.02", "--h", "2e-4", "--steps", "5"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["extinct_after"].as_u64().is_some());
}
