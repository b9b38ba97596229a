//! End-to-end checks of the installed binary: output schemas, reproducibility
//! guarantees, the --out path, and exit codes.

use std::process::Command;

fn agglab(args: &[&str], envs: &[(&str, &str)]) -> (String, String, i32) {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_agglab"));
    cmd.args(args).env_remove("AGGLAB_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    (
        String::from_utf8(out.stdout).expect("stdout is utf-8"),
        String::from_utf8(out.stderr).expect("stderr is utf-8"),
        out.status.code().expect("no signal"),
    )
}

#[test]
fn minimax_json_schema_and_frozen_small_case() {
    let (stdout, _, code) = agglab(&["minimax", "--n", "8", "--d", "2"], &[]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    for key in ["n", "d", "value", "value_squared", "lower", "upper", "certificate", "poly"] {
        assert!(v.get(key).is_some(), "missing key {key}");
    }
    let value = v["value"].as_f64().unwrap();
    assert!((value - 3.0 / 7.0).abs() < 1e-12, "value {value}");
    assert_eq!(v["certificate"].as_array().unwrap().len(), 3);
    assert_eq!(v["poly"].as_array().unwrap().len(), 3);
}

#[test]
fn curves_csv_schema_and_mc_gating() {
    let (stdout, _, code) = agglab(
        &["curves", "--n", "6", "--d", "1", "--d", "2", "--samples", "2000", "--seed", "3"],
        &[],
    );
    assert_eq!(code, 0);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(
        lines[0],
        "n,d,error_lower,error_upper,discrete_optimum,mc_estimate,mc_stderr"
    );
    assert_eq!(lines.len(), 3);
    for line in &lines[1..] {
        assert_eq!(line.split(',').count(), 7);
        assert!(line.split(',').all(|f| !f.is_empty()), "small n fills every column: {line}");
    }

    // Beyond the witness-model agent cap the MC columns stay empty.
    let (stdout, _, code) =
        agglab(&["curves", "--n", "40", "--d", "2", "--samples", "100"], &[]);
    assert_eq!(code, 0);
    let row = stdout.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert!(!fields[4].is_empty(), "grid optimum still present");
    assert_eq!(&fields[5..], &["", ""], "MC columns empty at n=40: {row}");
}

#[test]
fn query_budget_matches_analytic_line() {
    let (stdout, _, code) =
        agglab(&["query-budget", "--n", "10", "--samples", "4000", "--seed", "1"], &[]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines[0], "n,d,analytic,exact,mc_estimate,mc_stderr");
    assert_eq!(lines.len(), 10, "budgets 1..=9 by default");
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        let analytic: f64 = fields[2].parse().unwrap();
        let exact: f64 = fields[3].parse().unwrap();
        assert!((analytic - exact).abs() <= 1e-12, "exact off the line: {line}");
    }
}

#[test]
fn common_signal_csv_schema() {
    let (stdout, _, code) =
        agglab(&["common-signal", "--n", "4", "--samples", "3000"], &[]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(
        lines[0],
        "n,samples,query_count,order_depth,agent_reach,reconstruction_worst,mc_mse,mc_stderr,\
         max_residual,fixed_rule_worst,d1_closed_form_squared,uneven_fixed_mse,uneven_precision_mse"
    );
    assert_eq!(lines.len(), 2);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&fields[..6], &["4", "3000", "5", "2", "2", "0"]);
}

#[test]
fn reruns_and_thread_counts_are_byte_identical() {
    let args =
        ["curves", "--n", "8", "--d-max", "4", "--samples", "50000", "--seed", "11"];
    let (first, _, _) = agglab(&args, &[("AGGLAB_THREADS", "1")]);
    let (second, _, _) = agglab(&args, &[("AGGLAB_THREADS", "1")]);
    assert_eq!(first, second, "same seed and config must reproduce bytes");
    let (parallel, _, _) = agglab(&args, &[("AGGLAB_THREADS", "4")]);
    assert_eq!(first, parallel, "thread count must not change output");
}

#[test]
fn out_flag_writes_the_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("budget.csv");
    let base = ["query-budget", "--n", "6", "--samples", "2000", "--seed", "7"];
    let (stdout, _, code) = agglab(&base, &[]);
    assert_eq!(code, 0);
    let mut with_out: Vec<&str> = base.to_vec();
    let path_str = path.to_str().unwrap();
    with_out.extend(["--out", path_str]);
    let (quiet, _, code) = agglab(&with_out, &[]);
    assert_eq!(code, 0);
    assert!(quiet.is_empty(), "--out suppresses stdout");
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout);
}

#[test]
fn verify_passes_and_domain_errors_exit_nonzero() {
    let (stdout, _, code) =
        agglab(&["verify", "minimax", "--samples", "2000"], &[]);
    assert_eq!(code, 0, "minimax suite must pass:\n{stdout}");
    assert!(stdout.contains("pass"));

    let (_, stderr, code) = agglab(&["minimax", "--n", "5000", "--d", "3"], &[]);
    assert_eq!(code, 1);
    assert!(stderr.starts_with("agglab: "), "stderr was: {stderr}");
}
