use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thetapair")).args(args).env("THETAPAIR_CACHE_DIR", cache).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn decompose_reconstructs_its_input() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run(dir.path(), &["decompose", "2", "1", "5", "3"]));
    assert_eq!(v["verified"], true);
    assert_eq!(v["product"], serde_json::json!([[2, 1], [5, 3]]));
    assert_eq!(v["tokens"], serde_json::json!(["S", "T^-3", "S", "T^-2", "S"]));
    let v = json(&run(dir.path(), &["decompose", "-3", "1", "-7", "2"]));
    assert_eq!(v["verified"], true);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["decompose", "2", "1", "5", "4"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["no-such-command"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["theta-expand", "--input", "{\"gram\": 3}"]).status.code(), Some(1));
    assert_eq!(run(dir.path(), &["mock-expand", "--h", "1", "--t", "5", "--N", "3"]).status.code(), Some(1));
    // a pole of the Appell-Lerch sum is a mathematical rejection
    let out = run(dir.path(), &["mock-expand", "--h", "1", "--t", "1", "--N", "1"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(run(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn cusps_of_gamma0_108() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run(dir.path(), &["cusps", "--gamma0", "108", "--gamma1", "1"]));
    assert_eq!(v["index"], 216);
    assert_eq!(v["cusps"].as_array().unwrap().len(), 18);
    let widths: u64 = v["cusps"].as_array().unwrap().iter().map(|c| c["width"].as_u64().unwrap()).sum();
    assert_eq!(widths, 216);
    assert!(v["cusps"][0]["word"].is_array());
}

#[test]
fn theta_expand_is_cached_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["theta-expand", "--input", r#"{"polygonal": {"m": 8, "a": 1, "b": 3, "c": 3}}"#, "--cusp", "1/3", "--bound", "4"];
    let first = run(dir.path(), &args);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    let second = run(dir.path(), &args);
    let fresh = tempfile::tempdir().unwrap();
    let third = run(fresh.path(), &args);
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(first.stdout, third.stdout);
    let v = json(&first);
    assert_eq!(v["cusp"], "1/3");
    assert!(v["expansion"]["terms"].as_array().is_some_and(|t| !t.is_empty()));
}

#[test]
fn mock_expand_reports_principal_part() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run(dir.path(), &["mock-expand", "--h", "2", "--t", "1", "--N", "3", "--bound", "1"]));
    assert_eq!(v["spec"], "F_{2,1,3}");
    let terms = v["holo"]["terms"].as_array().unwrap();
    assert_eq!(terms[0], serde_json::json!([-4, 1, "1/2"]));
}

#[test]
fn xi_check_reports_small_error() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&run(dir.path(), &["xi-check", "--h", "1", "--t", "1", "--N", "2"]));
    assert!(v["max_error"].as_f64().unwrap() < 1e-6);
}

#[test]
fn octagonal_polygon_is_orthogonal() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("out.json");
    let args = ["almost-universal", "--m", "8", "--a", "1", "--b", "3", "--c", "3", "--json", report.to_str().unwrap()];
    let out = run(&dir.path().join("cache"), &args);
    let v = json(&out);
    assert_eq!(v["orthogonal"], true);
    assert_eq!(v["group"], "Gamma0(108) ∩ Gamma1(12)");
    assert_eq!(v["index"], 864);
    assert_eq!(v["cusps"].as_array().unwrap().len(), 30);
    let totals = v["totals"].as_object().unwrap();
    assert_eq!(totals.len(), 2);
    assert!(totals.values().all(|t| t == "0"));
    assert_eq!(std::fs::read(&report).unwrap(), out.stdout);
    let again = run(&dir.path().join("cache"), &args);
    assert_eq!(again.stdout, out.stdout);
}
