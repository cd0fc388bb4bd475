//! End-to-end checks on the installed binary: exit codes, determinism,
//! and a frozen expansion oracle.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nonarch"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn expand_reports_frozen_coefficients() {
    // samples 0, 1, 4 are n^2; binomial-basis coefficients are 0, 1, 2
    let out = run(&["expand", "--degree", "2", "--samples", "0,1,4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let coeffs: Vec<&str> = v["coefficients_rational"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c.as_str().unwrap())
        .collect();
    assert_eq!(coeffs, ["0", "1", "2"]);
}

#[test]
fn verify_all_passes_and_is_deterministic() {
    for p in ["2", "3", "5"] {
        let args = ["verify-all", "--prime", p, "--precision", "20", "--seed", "7"];
        let a = run(&args);
        assert!(a.status.success(), "prime {}", p);
        let b = run(&args);
        assert_eq!(a.stdout, b.stdout, "prime {}", p);
    }
}

#[test]
fn usage_errors_exit_with_code_two() {
    // missing required prime
    let out = run(&["verify-all"]);
    assert_eq!(out.status.code(), Some(2));
    // non-prime modulus
    let out = run(&["verify-all", "--prime", "6"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
    // unknown subcommand
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_replay_is_byte_identical_for_paths() {
    let args = [
        "sample-paths",
        "--prime",
        "3",
        "--seed",
        "11,12",
        "--format",
        "csv",
    ];
    let a = run(&args);
    assert!(a.status.success());
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("seed,node_index,node,value"));
}
