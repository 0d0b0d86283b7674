use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn stocpack(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stocpack")).args(args).current_dir(dir).output().expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn gen_then_solve_reports_lp() {
    let dir = tempfile::tempdir().unwrap();
    let out = stocpack(dir.path(), &["gen", "--family", "correlated-gap", "--n", "4", "--out", "g.json"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let out = stocpack(dir.path(), &["solve", "--instance", "g.json", "--pipeline", "nocancel"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["pipeline"], "nocancel");
    assert!(report["objective"].as_f64().unwrap() >= 0.25 - 1e-6);
    assert_eq!(report["lps"][0]["status"], "Optimal");
}

#[test]
fn stock_full_solve_has_both_halves() {
    let dir = tempfile::tempdir().unwrap();
    stocpack(dir.path(), &["gen", "--family", "cancel-benefit", "--n", "6", "--out", "c.json"]);
    let out = stocpack(dir.path(), &["solve", "--instance", "c.json", "--pipeline", "stock-full", "--lp-dump", "c.lp"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    let labels: Vec<&str> = report["lps"].as_array().unwrap().iter().map(|l| l["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["early", "late"]);
    let dump = fs::read_to_string(dir.path().join("c.lp")).unwrap();
    assert!(dump.contains("Maximize") || dump.contains("maximize"), "{dump}");
}

#[test]
fn invalid_instance_is_rejected_with_reasons() {
    let dir = tempfile::tempdir().unwrap();
    let bad = r#"{"kind":"stock","budget":4,"items":[[{"size":1,"prob":0.5,"reward":1.0},{"size":2,"prob":0.2,"reward":0.0}]]}"#;
    fs::write(dir.path().join("bad.json"), bad).unwrap();
    let out = stocpack(dir.path(), &["run", "--instance", "bad.json", "--pipeline", "nocancel", "--trials", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("bad.json"), "{}", stderr(&out));
}

#[test]
fn pipeline_must_match_instance_kind() {
    let dir = tempfile::tempdir().unwrap();
    stocpack(dir.path(), &["gen", "--family", "correlated-gap", "--n", "3", "--out", "g.json"]);
    let out = stocpack(dir.path(), &["solve", "--instance", "g.json", "--pipeline", "mab-tree"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("mab"));
}

#[test]
fn generator_arguments_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let odd = stocpack(dir.path(), &["gen", "--family", "cancel-benefit", "--n", "5"]);
    assert_eq!(odd.status.code(), Some(2));
    let missing = stocpack(dir.path(), &["gen", "--family", "random-stock", "--n", "3"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).contains("--budget"));
    let short = stocpack(dir.path(), &["gen", "--family", "preemption-gap", "--n", "2", "--L", "3", "--m", "1", "--budget", "2"]);
    assert_eq!(short.status.code(), Some(2));
}

#[test]
fn run_is_reproducible_and_traces_every_trial() {
    let dir = tempfile::tempdir().unwrap();
    stocpack(dir.path(), &["gen", "--family", "random-mab", "--budget", "4", "--seed", "9", "--out", "m.json"]);
    let args = ["run", "--instance", "m.json", "--pipeline", "mab-tree", "--trials", "500", "--seed", "3", "--trace", "t.jsonl"];
    let first = stocpack(dir.path(), &args);
    assert!(first.status.success(), "{}", stderr(&first));
    let trace = fs::read_to_string(dir.path().join("t.jsonl")).unwrap();
    let summaries = trace.lines().filter(|l| l.contains("\"sampled\"")).count();
    assert_eq!(summaries, 500);
    let second = stocpack(dir.path(), &args);
    assert_eq!(first.stdout, second.stdout);
    let csv = String::from_utf8(first.stdout).unwrap();
    assert!(csv.starts_with("check,mean,stderr,reference,ratio,verdict\n"), "{csv}");
}

#[test]
fn certify_passes_on_correlated_gap() {
    let dir = tempfile::tempdir().unwrap();
    stocpack(dir.path(), &["gen", "--family", "correlated-gap", "--n", "4", "--out", "g.json"]);
    let out = stocpack(dir.path(), &["certify", "--instance", "g.json", "--pipeline", "nocancel", "--trials", "20000"]);
    let csv = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{csv}");
    assert!(csv.starts_with("check,verdict,value,reference,detail\n"));
    assert!(!csv.contains(",fail,"), "{csv}");
}
