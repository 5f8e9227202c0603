#![allow(clippy::approx_constant)]

use std::process::Command;

use qccp_cli::{run, EXIT_COMPARISON_FAILED, EXIT_INVALID, EXIT_OK, EXIT_USAGE};
use serde_json::Value;

fn qccp(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("qccp").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let (code, out, err) = qccp(&full);
    assert_eq!(code, EXIT_OK, "{err}");
    serde_json::from_str(&out).unwrap()
}

fn without_wall_time(mut v: Value) -> Value {
    for row in v["rows"].as_array_mut().unwrap() {
        row["wall_ms"] = Value::Null;
    }
    v
}

fn temp_path(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("qccp-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn verify_appendix_d6_passes() {
    let (code, out, _) = qccp(&["verify-appendix", "--dim", "6"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("0.8000"));
    assert!(out.contains("PASS"));
}

#[test]
fn verify_appendix_all_fails_under_tight_tolerance() {
    let (code, out, _) = qccp(&["verify-appendix", "--dim", "all", "--tolerance", "1e-6"]);
    assert_eq!(code, EXIT_COMPARISON_FAILED);
    assert!(out.contains("FAIL"));
    let v = json(&["verify-appendix"]);
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    assert_eq!(v["passed"], Value::Bool(true));
}

#[test]
fn optimize_qs_d2() {
    let v = json(&["optimize-qs", "--dim", "2", "--restarts", "20", "--seed", "7"]);
    let value = v["rows"][0]["value"].as_f64().unwrap();
    assert!((value - 0.7071).abs() < 1e-3, "{value}");
    assert_eq!(v["rows"][0]["seed"], 7);
    assert_eq!(v["rows"][0]["restarts"], 20);
}

#[test]
fn classical_exact_d2() {
    let (code, out, _) = qccp(&["classical", "--dim", "2", "--exact"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("0.500000"));
    assert!(out.contains("encoding") && out.contains("decoding"));
    let v = json(&["classical", "--dim", "2", "--exact"]);
    assert_eq!(v["rows"][0]["value"].as_f64().unwrap(), 0.5);
    assert_eq!(v["details"]["encoding"].as_array().unwrap().len(), 2);
}

#[test]
fn json_reports_are_reproducible_across_thread_counts() {
    let args = ["optimize-qs", "--dim", "3", "--restarts", "8", "--seed", "3"];
    let mut one = args.to_vec();
    one.extend(["--threads", "1"]);
    let mut three = args.to_vec();
    three.extend(["--threads", "3"]);
    assert_eq!(without_wall_time(json(&one)), without_wall_time(json(&three)));
    assert_eq!(without_wall_time(json(&args)), without_wall_time(json(&args)));
}

#[test]
fn table_reproduces_reference_constants() {
    let (code, out, _) = qccp(&["table"]);
    assert_eq!(code, EXIT_OK);
    for row in qccp::dataio::reference_table().rows() {
        let line = out
            .lines()
            .find(|l| l.split_whitespace().next() == Some(&row.d.to_string()))
            .unwrap();
        for v in [row.qs_lower, row.qs_lower_prior, row.bell_max, row.ml_max, row.qs_trace_one]
            .into_iter()
            .flatten()
        {
            assert!(line.contains(&format!("{v:.4}")), "{line}");
        }
    }
    assert!(out.contains("appendix") && out.contains("classical-exact"));
}

#[test]
fn csv_output_and_out_file() {
    let path = temp_path("table.csv");
    let p = path.to_str().unwrap();
    let (code, out, _) = qccp(&["table", "--dim", "6", "--format", "csv", "--out", p]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("d,method,value,reference,delta,restarts,seed,wall_ms\n"));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), out);
}

#[test]
fn saved_strategy_evaluates_to_reported_value() {
    let path = temp_path("best.json");
    let p = path.to_str().unwrap();
    let v = json(&["optimize-qs", "--dim", "3", "--restarts", "4", "--save", p]);
    let e = json(&["evaluate", "--strategy", p, "--dim", "3"]);
    let a = v["rows"][0]["value"].as_f64().unwrap();
    let b = e["rows"][0]["value"].as_f64().unwrap();
    assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    let (code, _, err) = qccp(&["evaluate", "--strategy", p, "--dim", "4"]);
    assert_eq!(code, EXIT_INVALID, "{err}");
}

#[test]
fn bell_strategy_files_evaluate() {
    let path = temp_path("bell.json");
    let p = path.to_str().unwrap();
    let v = json(&["optimize-bell", "--dim", "2", "--restarts", "4", "--save", p]);
    let e = json(&["evaluate", "--strategy", p, "--tolerance", "1e-3"]);
    assert_eq!(e["rows"][0]["method"], "evaluate-bell");
    assert_eq!(e["passed"], Value::Bool(true));
    let a = v["rows"][0]["value"].as_f64().unwrap();
    assert!((a - e["rows"][0]["value"].as_f64().unwrap()).abs() < 1e-10);
}

#[test]
fn invalid_input_exits_2() {
    let path = temp_path("broken.json");
    std::fs::write(&path, "{\"dimension\": 2, \"model\": \"prepare-measure\"").unwrap();
    let (code, _, err) = qccp(&["evaluate", "--strategy", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("parse error"), "{err}");
    let (code, _, _) = qccp(&["classical", "--dim", "6", "--exact"]);
    assert_eq!(code, EXIT_INVALID);
    let (code, _, _) = qccp(&["optimize-qs", "--dim", "1"]);
    assert_eq!(code, EXIT_INVALID);
    let (code, _, _) = qccp(&["optimize-qs", "--dim", "2", "--restarts", "0"]);
    assert_eq!(code, EXIT_INVALID);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(qccp(&["evaluate", "--bogus"]).0, EXIT_USAGE);
    assert_eq!(qccp(&["verify-appendix", "--dim", "5"]).0, EXIT_USAGE);
    assert_eq!(qccp(&["optimize-qs", "--dim", "3", "--constraint", "sideways"]).0, EXIT_USAGE);
    assert_eq!(qccp(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(qccp(&["--help"]).0, EXIT_OK);
}

#[test]
fn constrained_optimization_uses_trace_one_reference() {
    let v = json(&["optimize-qs", "--dim", "3", "--restarts", "6", "--constraint", "trace-one"]);
    assert_eq!(v["rows"][0]["method"], "seesaw-qs-trace-one");
    assert_eq!(v["rows"][0]["reference"].as_f64(), Some(0.7287));
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_qccp");
    let ok = Command::new(bin).args(["verify-appendix", "--dim", "7"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
    let usage = Command::new(bin).args(["table", "--nope"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&usage.stderr).contains("Usage"));
}
