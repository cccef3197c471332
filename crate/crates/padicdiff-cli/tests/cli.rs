use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn padicdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_padicdiff")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report")
}

fn default_toml() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("default.toml")
}

#[test]
fn dwork_check_has_all_zero_residuals() {
    let out = padicdiff(&["dwork-check", "--q", "2", "--K", "12"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verdict"], "pass");
    let rows = v["rows"].as_array().unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r["max_residual"] == "0" && r["through"] == 10));
    assert!(!v["paper_ref"].as_str().unwrap().is_empty());
}

#[test]
fn sum_estimate_csv_has_exact_valuations() {
    let out =
        padicdiff(&["sum-estimate", "--p", "3", "--f", "1", "--k", "1", "--d", "4", "--N", "6,8", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "p,f,k,d,N,n_N,M,s,v_sum,v_dominant,bound,pass");
    assert_eq!(lines.next().unwrap(), "3,1,1,4,6,456,5,92,-3,-3,-3/2,true");
    assert!(lines.next().unwrap().starts_with("3,1,1,4,8,4101,"));
    assert!(String::from_utf8(out.stderr).unwrap().contains("verdict: pass"));
}

#[test]
fn parity_violation_is_a_config_error() {
    let out = padicdiff(&["sum-estimate", "--p", "3", "--f", "1", "--k", "1", "--d", "4", "--N", "7"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("parity rule"));
    assert!(out.stdout.is_empty());
}

#[test]
fn incompatible_twist_is_rejected() {
    let out = padicdiff(&["zeta-valuations", "--p", "3", "--f", "1", "--k", "1", "--d", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_file_exits_2() {
    let out = padicdiff(&["kummer-table", "--config", "/nonexistent/padicdiff.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("cannot read config"));
}

#[test]
fn flag_overrides_config_precision() {
    let cfg = default_toml();
    let out = padicdiff(&["dwork-check", "--config", cfg.to_str().unwrap(), "--prec", "70"]);
    assert_eq!(json(&out)["params"]["prec"], 70);
    let out = padicdiff(&["dwork-check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(json(&out)["params"]["prec"], 60);
}

#[test]
fn identical_seeds_give_identical_bytes() {
    let args = ["cocycle-check", "--cases", "12", "--seed", "7", "--k-pos", "6"];
    let a = padicdiff(&args);
    let b = padicdiff(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = padicdiff(&["cocycle-check", "--cases", "12", "--seed", "8", "--k-pos", "6"]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn a_failed_check_exits_1() {
    // K_neg = 3 is too short for the residuals to improve on doubling
    let out = padicdiff(&["micro-inverse", "--k-neg", "3"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(json(&out)["verdict"].as_str().unwrap().starts_with("fail"));
}

#[test]
fn report_goes_to_the_out_file() {
    let path = std::env::temp_dir().join(format!("padicdiff-{}.json", std::process::id()));
    let out = padicdiff(&["star-props", "--cases", "20", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(v["command"], "star-props");
    assert_eq!(v["runtime_ms"], 0);
}

#[test]
fn all_with_default_config_passes() {
    let cfg = default_toml();
    let out = padicdiff(&["all", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["rows"].as_array().unwrap().len(), 10);
}
