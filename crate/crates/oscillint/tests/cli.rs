//! End-to-end tests of the command-line interface: artifact shapes, exit
//! codes, error reporting, and byte-level reproducibility.

use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn oscillint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_oscillint"))
        .args(args)
        .env_remove("OSCILLINT_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> &str {
    std::str::from_utf8(&out.stdout).expect("stdout is UTF-8")
}

fn stderr_of(out: &Output) -> &str {
    std::str::from_utf8(&out.stderr).expect("stderr is UTF-8")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_str(stdout_of(out)).expect("stdout parses as JSON")
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap_or_else(|| panic!("not a number: {v}"))
}

#[test]
fn certify_prints_a_certificate_document() {
    let out = oscillint(&["certify", fixture("damped.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let doc = json_of(&out);
    assert_eq!(doc["label"], "damped-constant");
    assert_eq!(doc["summary"], "EXP_STABLE");
    let certs = doc["certificates"].as_array().unwrap();
    let ids: Vec<&str> = certs
        .iter()
        .map(|c| c["criterion"].as_str().unwrap())
        .collect();
    for (got, want) in ids
        .iter()
        .zip(["C1", "C2_LEVIN", "T3", "C7", "T6", "T7", "T8", "T9", "T10"])
    {
        assert!(got.starts_with(want), "criterion {got} out of order");
    }
    for cert in certs {
        for key in ["criterion", "verdict", "claim", "witnesses", "margin", "window", "paper_ref"] {
            assert!(cert.get(key).is_some(), "certificate lacks {key}");
        }
    }
}

#[test]
fn certify_writes_the_same_bytes_to_the_requested_file() {
    let target = std::env::temp_dir().join("oscillint-cli-certify.json");
    let out = oscillint(&[
        "certify",
        fixture("damped.json").to_str().unwrap(),
        "--json",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let written = std::fs::read(&target).unwrap();
    std::fs::remove_file(&target).ok();
    assert_eq!(written, out.stdout);
}

#[test]
fn certify_runs_are_byte_identical() {
    let path = fixture("damped.json");
    let first = oscillint(&["certify", path.to_str().unwrap()]);
    let second = oscillint(&["certify", path.to_str().unwrap()]);
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn floquet_reports_the_wronskian_both_ways() {
    let out = oscillint(&["floquet", fixture("decoy.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert!(
        stdout_of(&out).contains("3.1415926535897931e+0"),
        "period should print with 17 significant digits",
    );
    let doc = json_of(&out);
    assert_eq!(doc["classification"], "REAL_ROOT_GUARD_FAILED");
    let w_expected = (-std::f64::consts::PI).exp();
    for key in ["W_direct", "W_liouville"] {
        let w = num(&doc[key]);
        assert!(
            (w - w_expected).abs() <= 1e-6 * w_expected,
            "{key} = {w} vs e^-pi = {w_expected}",
        );
    }
    let mods: Vec<f64> = doc["lambda"]
        .as_array()
        .unwrap()
        .iter()
        .map(|l| num(&l["mod"]))
        .collect();
    let (lo, hi) = (mods[0].min(mods[1]), mods[0].max(mods[1]));
    assert!((hi - 1.0).abs() <= 1e-6 && (lo - w_expected).abs() <= 1e-6);
}

#[test]
fn simulate_reproduces_the_undamped_mode() {
    let out = oscillint(&[
        "simulate",
        fixture("decoy.json").to_str().unwrap(),
        "--x0",
        "0",
        "--v0",
        "1",
        "--T",
        "20",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let lines: Vec<&str> = stdout_of(&out).lines().collect();
    assert_eq!(lines[0], "t,x,xdot");
    assert_eq!(lines.len(), 2002);
    for line in &lines[1..] {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let err = (cols[1] - cols[0].sin()).abs();
        assert!(err <= 1e-6, "x({}) = {} deviates from sin by {err}", cols[0], cols[1]);
    }
}

#[test]
fn oracle_reports_decay_and_kernel_checks() {
    let out = oscillint(&["oracle", fixture("damped.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let doc = json_of(&out);
    assert_eq!(doc["decay"]["method"], "envelope_fit");
    assert!(num(&doc["decay"]["rate"]) > 0.9);
    assert_eq!(doc["positivity"], Value::Bool(true));
    assert!(num(&doc["eq34"]["min"]) >= -1e-8);
    assert!(num(&doc["eq34"]["max"]) <= 1.0 + 1e-8);
    assert!(num(&doc["lemma6_max_discrepancy"]) <= 1e-6);
}

#[test]
fn sweep_flags_locate_the_restoring_threshold() {
    let out = oscillint(&[
        "sweep",
        fixture("shifted.json").to_str().unwrap(),
        "--param",
        "bbar",
        "--from",
        "4.0",
        "--to",
        "4.6",
        "--steps",
        "13",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let lines: Vec<&str> = stdout_of(&out).lines().collect();
    assert_eq!(
        lines[0],
        "index,value,c1,c2_levin,t3,c7,t6,t7,t8,t9,t10,summary,lambda_fit",
    );
    assert_eq!(lines.len(), 14);
    let rows: Vec<Vec<&str>> = lines[1..].iter().map(|l| l.split(',').collect()).collect();
    let t9: Vec<&str> = rows.iter().map(|r| r[9]).collect();
    let flips: Vec<usize> = (1..t9.len()).filter(|&i| t9[i] != t9[i - 1]).collect();
    assert_eq!(flips, [6], "t9 verdicts should flip once at bbar = 4.30: {t9:?}");
    assert_eq!((t9[5], t9[6]), ("FAIL", "PASS"));
    assert_eq!(rows[6][11], "EXP_STABLE");
}

#[test]
fn sweep_falls_back_to_the_axis_in_the_file() {
    let out = oscillint(&["sweep", fixture("hill.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let lines: Vec<&str> = stdout_of(&out).lines().collect();
    assert_eq!(lines.len(), 5);
    let t7: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(7).unwrap())
        .collect();
    assert_eq!(t7, ["FAIL", "FAIL", "PASS", "PASS"]);
}

#[test]
fn sweep_runs_are_byte_identical() {
    let path = fixture("hill.json");
    let first = oscillint(&["sweep", path.to_str().unwrap()]);
    let second = oscillint(&["sweep", path.to_str().unwrap()]);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn sweep_with_an_incomplete_axis_is_an_error() {
    let out = oscillint(&[
        "sweep",
        fixture("shifted.json").to_str().unwrap(),
        "--param",
        "bbar",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("error:"), "stderr: {}", stderr_of(&out));
}

#[test]
fn a_missing_file_reports_its_path() {
    let out = oscillint(&["certify", "/no/such/problem.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("/no/such/problem.json"));
}

#[test]
fn malformed_json_is_reported_as_a_syntax_error() {
    let out = oscillint(&["certify", fixture("bad-syntax.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("error:"));
}

#[test]
fn an_unknown_key_reports_its_pointer() {
    let out = oscillint(&["certify", fixture("bad-schema.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr_of(&out).contains("/equation/bogus"),
        "stderr: {}",
        stderr_of(&out),
    );
}

#[test]
fn an_invalid_thread_cap_is_rejected() {
    for bad in ["zebra", "0", "-1"] {
        let out = Command::new(env!("CARGO_BIN_EXE_oscillint"))
            .args(["certify", fixture("damped.json").to_str().unwrap()])
            .env("OSCILLINT_THREADS", bad)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(1), "cap {bad:?} should be rejected");
        assert!(
            stderr_of(&out).contains("OSCILLINT_THREADS"),
            "stderr: {}",
            stderr_of(&out),
        );
    }
}

#[test]
fn a_valid_thread_cap_is_accepted() {
    let out = Command::new(env!("CARGO_BIN_EXE_oscillint"))
        .args(["certify", fixture("damped.json").to_str().unwrap()])
        .env("OSCILLINT_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
}

#[test]
fn usage_errors_exit_one() {
    for args in [&["certify"][..], &["frobnicate"][..], &["simulate", "x.json"][..]] {
        let out = oscillint(args);
        assert_eq!(out.status.code(), Some(1), "args {args:?}");
    }
}

#[test]
fn help_exits_zero() {
    let out = oscillint(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout_of(&out).contains("certify"));
}
