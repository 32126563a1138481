//! End-to-end checks of the command-line binary: report files, overrides,
//! and machine-parsable failure output.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cogradar"))
}

fn scratch(case: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cogradar-cli-{}-{case}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const TINY_SCENARIO: &str = "\
[array]
ntx = 3
nrx = 3

[simulation]
pulses = 2
mc_runs = 1
seed = 7

[[target]]
from = 0
to = 1
nu = 0.2
snr_db = 5
";

#[test]
fn psd_writes_512_rows() {
    let dir = scratch("psd");
    let out = bin()
        .args(["psd", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("psd.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "nu,psd");
    assert_eq!(lines.len(), 513);
    assert!(!csv.contains('\r'));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn simulate_writes_all_reports() {
    let dir = scratch("simulate");
    let scn = dir.join("tiny.scn");
    std::fs::write(&scn, TINY_SCENARIO).unwrap();
    let out = bin()
        .args(["simulate", "--scenario"])
        .arg(&scn)
        .args(["--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.join("report.csv")).unwrap();
    assert!(report.starts_with("pulse,bin,nu,detect_freq,pd_hat_mean,reward_mean,min_pattern_mean\n"));
    assert_eq!(report.lines().count(), 1 + 2 * 20);
    assert!(dir.join("qtable.csv").exists());
    assert!(dir.join("actions.csv").exists());
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn policy_override_reaches_the_run() {
    let dir = scratch("policy");
    let scn = dir.join("tiny.scn");
    std::fs::write(&scn, TINY_SCENARIO).unwrap();
    let out = bin()
        .args(["simulate", "--scenario"])
        .arg(&scn)
        .args(["--policy", "omni", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("omnidirectional"), "stdout: {stdout}");
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn roc_single_pfa_collapses_sweep() {
    let dir = scratch("roc");
    let scn = dir.join("tiny.scn");
    std::fs::write(&scn, TINY_SCENARIO).unwrap();
    let out = bin()
        .args(["roc", "--scenario"])
        .arg(&scn)
        .args(["--pfa", "0.01", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("roc.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "pfa,bin,nu,detect_freq");
    // One operating point, one target bin.
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("1.00000000e-2,14,"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn sweep_n_single_size() {
    let dir = scratch("sweep");
    let scn = dir.join("tiny.scn");
    std::fs::write(&scn, TINY_SCENARIO).unwrap();
    let out = bin()
        .args(["sweep-n", "--scenario"])
        .arg(&scn)
        .args(["--ntx", "3", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("sweep.csv")).unwrap();
    assert!(csv.starts_with("n,bin,nu,detect_freq\n"));
    assert!(csv.lines().nth(1).unwrap().starts_with("3,14,"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn beam_bench_writes_iteration_trace() {
    let dir = scratch("bench");
    let out = bin()
        .args(["beam-bench", "--ntx", "4", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.join("beam_bench.csv")).unwrap();
    assert!(csv.starts_with("ntx,iteration,min_pattern,subproblem_value,kkt_residual,converged\n"));
    assert!(csv.lines().count() > 2);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn parse_failure_is_one_machine_parsable_line() {
    let dir = scratch("badparse");
    let scn = dir.join("bad.scn");
    std::fs::write(&scn, "[disturbance]\nmu = 0.5\n").unwrap();
    let out = bin()
        .args(["simulate", "--scenario"])
        .arg(&scn)
        .args(["--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<&str> = stderr.lines().collect();
    assert_eq!(lines.len(), 1, "stderr: {stderr}");
    assert!(lines[0].starts_with("error: scenario parse error at line 2"));
    assert!(lines[0].contains("mu"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn unknown_preset_fails_cleanly() {
    let dir = scratch("badpreset");
    let out = bin()
        .args(["simulate", "--preset", "scenario99", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.starts_with("error: "), "stderr: {stderr}");
    assert_eq!(stderr.lines().count(), 1);
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn missing_scenario_file_names_the_path() {
    let dir = scratch("missing");
    let out = bin()
        .args(["simulate", "--scenario", "/no/such/file.scn", "--out"])
        .arg(&dir)
        .output()
        .unwrap();
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("/no/such/file.scn"), "stderr: {stderr}");
    let _ = std::fs::remove_dir_all(&dir);
}
