//! End-to-end runs of the command-line tool.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sexratio"));
    cmd.env_remove("SEXRATIO_OUT");
    cmd
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn simulate_writes_hashed_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["--out", "res", "simulate", "--strategy", "pboys:2", "--n", "2000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("res/simulate");
    let m = manifest(&dir);
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["partial"], false);
    let names: Vec<&str> = m["artifacts"].as_array().unwrap().iter().map(|a| a["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"ratio_series.csv"), "{names:?}");
    let csv = fs::read_to_string(dir.join("ratio_series.csv")).unwrap();
    assert!(csv.starts_with("n,r,f,bar_r,bar_f\n"));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let a = run_in(tmp.path(), &["--out", "a", "--threads", "1", "simulate", "--strategy", "pboysmore:1", "--n", "3000", "--seed", "7"]);
    let b = run_in(tmp.path(), &["--out", "b", "--threads", "3", "simulate", "--strategy", "pboysmore:1", "--n", "3000", "--seed", "7"]);
    assert!(a.status.success() && b.status.success());
    let read = |d: &str| fs::read(tmp.path().join(d).join("simulate/ratio_series.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    let hash = |d: &str| manifest(&tmp.path().join(d).join("simulate"))["content_hash"].clone();
    assert_eq!(hash("a"), hash("b"));
}

#[test]
fn env_var_sets_default_output_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let target = tmp.path().join("from-env");
    let out = bin().current_dir(tmp.path()).env("SEXRATIO_OUT", &target).args(["exact", "--pmf", "pboys:1", "--jmax", "10"]).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(target.join("exact/pmf.csv").exists());
    assert!(!tmp.path().join("sexratio-out").exists());
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("cfg.toml"), "strategy = \"pboys:3\"\nn = 500\nseed = 11\nout_dir = \"cfgout\"\n").unwrap();
    let out = run_in(tmp.path(), &["--config", "cfg.toml", "simulate", "--n", "800"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&tmp.path().join("cfgout/simulate"));
    assert_eq!(m["config"]["n"], 800);
    assert_eq!(m["config"]["seed"], 11);
    assert_eq!(m["config"]["strategy"], "pboys:3");
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("cfg.toml"), "families = 3\n").unwrap();
    let out = run_in(tmp.path(), &["--config", "cfg.toml", "simulate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout_json(&out)["error"]["message"].is_string());
}

#[test]
fn bad_strategy_reports_json_error() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["--out", "o", "simulate", "--strategy", "girls:forever"]);
    assert_ne!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!(v["error"]["kind"].is_string());
    assert!(v["error"]["message"].as_str().unwrap().contains("girls:forever"));
}

#[test]
fn unknown_flag_exits_with_usage_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["simulate", "--families", "3"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["error"]["kind"], "usage");
}

#[test]
fn zero_threads_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["--threads", "0", "exact"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_detects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_in(tmp.path(), &["--out", "r", "exact", "--jmax", "12"]).status.success());
    assert!(run_in(tmp.path(), &["--out", "r", "ldp", "--n-grid", "64,96,128,160"]).status.success());
    let ok = run_in(tmp.path(), &["report", "r", "--json"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    assert_eq!(stdout_json(&ok)["manifests"].as_array().unwrap().len(), 2);

    let pmf = tmp.path().join("r/exact/pmf.csv");
    let mut text = fs::read_to_string(&pmf).unwrap();
    text.push_str("99,0,0\n");
    fs::write(&pmf, text).unwrap();
    let bad = run_in(tmp.path(), &["report", "r"]);
    assert_eq!(bad.status.code(), Some(3));
    assert_eq!(stdout_json(&bad)["error"]["kind"], "integrity");
}

#[test]
fn report_on_empty_dir_fails() {
    let tmp = tempfile::tempdir().unwrap();
    fs::create_dir(tmp.path().join("empty")).unwrap();
    let out = run_in(tmp.path(), &["report", "empty"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn chi_and_kappa_commands_run_small() {
    let tmp = tempfile::tempdir().unwrap();
    let chi = run_in(tmp.path(), &["--out", "o", "chi", "--n", "20000", "--cap", "100000", "--terms", "100000"]);
    assert!(chi.status.success(), "{}", String::from_utf8_lossy(&chi.stdout));
    let v: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("o/chi/chi.json")).unwrap()).unwrap();
    assert!(v.is_object());
    let kappa = run_in(tmp.path(), &["--out", "o", "kappa", "--c-grid", "0.5,1,2"]);
    assert!(kappa.status.success(), "{}", String::from_utf8_lossy(&kappa.stdout));
    let csv = fs::read_to_string(tmp.path().join("o/kappa/kappa.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
}

#[test]
fn limitcheck_runs_small() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["--out", "o", "limitcheck", "--n", "200", "--reps", "200"]);
    assert!(matches!(out.status.code(), Some(0) | Some(4)), "{}", String::from_utf8_lossy(&out.stdout));
    let m = manifest(&tmp.path().join("o/limitcheck"));
    assert!(m["artifacts"].as_array().unwrap().iter().any(|a| a["name"] == "gof.json"));
}

#[test]
fn verify_all_reduced_writes_one_line_per_criterion() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(tmp.path(), &["--out", "v", "verify-all", "--budget", "1"]);
    let text = String::from_utf8_lossy(&out.stdout);
    let lines: Vec<&str> = text.lines().filter(|l| l.starts_with('C')).collect();
    assert_eq!(lines.len(), 10, "{text}");
    assert!(matches!(out.status.code(), Some(0) | Some(4)));
    let dir = tmp.path().join("v/verify-all");
    assert!(dir.join("verify.json").exists());
    assert!(manifest(&dir)["artifacts"].as_array().unwrap().len() >= 2);
}
