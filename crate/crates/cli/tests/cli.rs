use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ensemblelab::export::ensemble_from_json;
use ensemblelab::protocols::protocol_by_name;

const E1: &str = r#"{"kind": "E1", "n": 4, "t": 1, "f_hat": 1, "vin": ["a", "b", "a", "c"], "F": [3], "T": [2], "M": [0, 1], "U": [0], "w": "c", "v_f": "v_f", "depth": 64}"#;

fn run(args: &[&str]) -> (i32, String) {
    let Output { status, stdout, stderr } = Command::new(env!("CARGO_BIN_EXE_ensemblelab")).args(args).output().unwrap();
    let mut text = String::from_utf8(stdout).unwrap();
    text.push_str(&String::from_utf8(stderr).unwrap());
    (status.code().unwrap(), text)
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn ams_bound_examples() {
    assert_eq!(run(&["ams-bound", "4", "1", "1", ";3"]), (0, "Q = 1/3 ≤ 1/3\n".into()));
    assert_eq!(run(&["ams-bound", "4", "1", "0", ";3"]), (0, "Q = 0\n".into()));
    let (code, out) = run(&["ams-bound", "4", "1", "1", "4;3"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("Q = 1/4"));
    let (code, out) = run(&["ams-bound", "4", "1", "1", ";2"]);
    assert_eq!(code, 2);
    assert!(out.contains("outside"));
}

#[test]
fn coin_demo_export_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, text) = run(&["simulate", "--protocol", "coin-demo", "--out", out, "--format", "both"]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("nodes: 3"));
    assert!(text.contains("leaf mass: 1"));
    let json = fs::read_to_string(dir.path().join("ensemble.json")).unwrap();
    let ens = ensemble_from_json(&json, protocol_by_name("coin-demo", 1, 0).unwrap()).unwrap();
    assert_eq!(ens.len(), 3);
    assert_eq!(ensemblelab::export::ensemble_to_json(&ens), json);
    assert!(fs::read_to_string(dir.path().join("ensemble.dot")).unwrap().contains("1/2"));
}

#[test]
fn truncation_is_flagged() {
    let (code, text) = run(&["simulate", "--depth", "5"]);
    assert_eq!(code, 1);
    assert!(text.contains("TRUNCATED (residual mass 1)"));
}

#[test]
fn indistinguishability_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let params = write(dir.path(), "e1.json", E1);
    let (code, text) = run(&["indist", "E1", "E2", "--params", &params, "--party", "0"]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("indistinguishable to p0"));
    let (code, text) = run(&["indist", "E1", "E2", "--params", &params, "--party", "3"]);
    assert_eq!(code, 1);
    assert!(text.contains("distinguishable to p3: at []"));
    let (code, _) = run(&["indist", "E1", &params, "--params", &params, "--party", "3"]);
    assert_eq!(code, 0);
    let (code, text) = run(&["indist", "E1", "E2", "--params", &params, "--party", "4"]);
    assert_eq!(code, 2);
    assert!(text.contains("out of range"));
}

#[test]
fn validity_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let clean = write(dir.path(), "clean.json", r#"{"t": 1, "inputs": ["a", "a", "b", "c"], "strategy": {"kind": "failure-free"}}"#);
    let (code, text) = run(&["validity", "--params", &clean]);
    assert_eq!(code, 0);
    assert!(text.contains("measured 1 vs bound 1 -> pass"));

    let mimic = write(
        dir.path(),
        "mimic.json",
        r#"{"t": 1, "inputs": ["a", "b", "c", "d"], "strategy": {"kind": "mimic", "corrupted": [3], "order": [3, 0, 2, 1], "bogus": "z"}}"#,
    );
    let out = dir.path().join("reports");
    let (code, text) = run(&["validity", "--params", &mimic, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("measured 2/3 vs bound 2/3 -> pass"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("validity-report.json")).unwrap()).unwrap();
    assert_eq!(report["measured"], "2/3");
    assert_eq!(report["branch"], "probabilistic");
    assert_eq!(report["pass"], true);

    let (code, text) = run(&["validity", "--protocol", "mock-biased", "--params", &clean]);
    assert_eq!(code, 1);
    assert!(text.contains("gap: 1"));
}

#[test]
fn scenario_command_checks_the_pair() {
    let dir = tempfile::tempdir().unwrap();
    let params = write(dir.path(), "e3.json", &E1.replace("\"E1\"", "\"E3\""));
    let out = dir.path().join("out");
    let (code, text) = run(&["scenario", "--params", &params, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{text}");
    assert!(text.contains("(E1,E3) p1: indistinguishable"));
    assert!(!text.contains("(E1,E3) p0"));
    assert!(out.join("scenario-E3.json").exists());
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("scenario-report.json")).unwrap()).unwrap();
    assert_eq!(report["f"], 1);
    assert_eq!(report["pair"]["pass"], true);
}

#[test]
fn local_ensemble_export() {
    let dir = tempfile::tempdir().unwrap();
    let params = write(dir.path(), "e1.json", E1);
    let (code, text) = run(&["local-ensemble", "--params", &params, "--party", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{text}");
    assert!(dir.path().join("local-p0.json").exists());
    let (code, _) = run(&["local-ensemble", "--params", &params]);
    assert_eq!(code, 2);
}

#[test]
fn falsify_exit_status() {
    let (code, text) = run(&["falsify"]);
    assert_eq!(code, 0);
    assert!(text.contains("no strict improvement at tested points"));
    let (code, text) = run(&["falsify", "--protocol", "mock-biased"]);
    assert_eq!(code, 1);
    assert!(text.contains("P1(z) = 1/2 > 0"));
}
