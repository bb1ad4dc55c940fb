//! End-to-end tests of the binary: flag parsing, output formats, exit codes,
//! and determinism contracts.

use std::process::{Command, Output};

fn progcell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_progcell"))
        .args(args)
        .env_remove("PROGCELL_SEED")
        .output()
        .expect("binary runs")
}

fn stdout_str(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn json_value(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout_str(out)).expect("JSON output")
}

fn value_of(out: &Output) -> f64 {
    json_value(out)["value"].as_f64().expect("value field")
}

#[test]
fn capacity_and_delay_examples() {
    let out = progcell(&["capacity", "--channel", "bsc", "--p", "0.25", "--t", "2"]);
    assert!(out.status.success());
    assert!((value_of(&out) - 0.6627).abs() < 1e-3);

    let out = progcell(&["capacity", "--channel", "bsc", "--p", "0.1", "--t", "0"]);
    assert_eq!(value_of(&out), 0.0);

    let out = progcell(&["delay", "--channel", "bec", "--p", "0.5", "--t", "2"]);
    assert_eq!(value_of(&out), 1.5);

    // CSV format prints the bare value with 12 significant digits.
    let out = progcell(&[
        "delay",
        "--channel",
        "bec",
        "--p",
        "0.5",
        "--t",
        "2",
        "--format",
        "csv",
    ]);
    assert_eq!(stdout_str(&out).trim(), "1.50000000000");
}

#[test]
fn z_channel_capacity_needs_alpha() {
    let out = progcell(&[
        "capacity",
        "--channel",
        "z",
        "--p",
        "0.5",
        "--t",
        "1",
        "--alpha",
        "0.5",
    ]);
    assert!(out.status.success());
    assert!((value_of(&out) - 0.3113).abs() < 1e-3);

    let out = progcell(&["capacity", "--channel", "z", "--p", "0.5", "--t", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_2_and_name_the_precondition() {
    let out = progcell(&["capacity", "--channel", "bsc", "--p", "0.7", "--t", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("[0, 0.5]"), "stderr was: {stderr}");

    let out = progcell(&[
        "optimize",
        "--problem",
        "f3",
        "--p",
        "0.1",
        "--D",
        "1",
        "--T",
        "-1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn optimize_f1_and_scheme_round_trip() {
    let out = progcell(&[
        "optimize",
        "--problem",
        "f1",
        "--channel",
        "bec",
        "--p",
        "0.2",
        "--D",
        "1",
        "--T",
        "-1",
    ]);
    assert!(out.status.success());
    let result = json_value(&out);
    assert!((result["value"].as_f64().unwrap() - 0.8).abs() < 1e-12);
    assert_eq!(result["certificate"], "closed-form");

    // The emitted scheme JSON feeds straight back into simulate.
    let scheme = serde_json::to_string(&result["scheme"]).unwrap();
    let out = progcell(&[
        "simulate",
        "--channel",
        "bec",
        "--p",
        "0.2",
        "--scheme",
        &scheme,
        "--n",
        "20000",
        "--seed",
        "1",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report = json_value(&out);
    // Truncated scheme: delay is pinned at the budget.
    assert!((report["mean_attempts"].as_f64().unwrap() - 1.0).abs() < 0.02);
}

#[test]
fn optimize_f3_marks_failed_cells_for_large_t() {
    let out = progcell(&[
        "optimize",
        "--problem",
        "f3",
        "--p",
        "0.1",
        "--D",
        "100",
        "--T",
        "4",
    ]);
    assert!(out.status.success());
    let result = json_value(&out);
    assert!((result["value"].as_f64().unwrap() - 0.999).abs() < 1e-12);
    assert_eq!(result["q_star"].as_f64().unwrap(), 0.0);
}

#[test]
fn optimize_f1z_noiseless() {
    let out = progcell(&[
        "optimize",
        "--problem",
        "f1z",
        "--p",
        "0",
        "--D",
        "2",
        "--T",
        "-1",
    ]);
    assert!(out.status.success());
    assert!((value_of(&out) - 1.0).abs() < 1e-9);
}

#[test]
fn optimize_f2_constant_sequence_matches_f1() {
    let f2 = progcell(&[
        "optimize",
        "--problem",
        "f2",
        "--channel",
        "bsc",
        "--seq",
        "0.3",
        "--D",
        "1",
        "--T",
        "3",
    ]);
    assert!(f2.status.success());
    let f1 = progcell(&[
        "optimize",
        "--problem",
        "f1",
        "--channel",
        "bsc",
        "--p",
        "0.3",
        "--D",
        "1",
        "--T",
        "3",
    ]);
    assert!((value_of(&f2) - value_of(&f1)).abs() < 1e-12);
}

#[test]
fn sweep_presets_are_deterministic() {
    let dir = std::env::temp_dir();
    let a = dir.join("progcell_cli_fig1_a.csv");
    let b = dir.join("progcell_cli_fig1_b.csv");
    for path in [&a, &b] {
        let out = progcell(&[
            "sweep",
            "--preset",
            "figure1",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    let bytes_a = std::fs::read(&a).unwrap();
    let bytes_b = std::fs::read(&b).unwrap();
    assert_eq!(bytes_a, bytes_b);
    let text = String::from_utf8(bytes_a).unwrap();
    assert!(text.starts_with("p,t,normcap,baseline\n"));
    assert!(text.lines().count() > 400);

    let fig2 = dir.join("progcell_cli_fig2.csv");
    let out = progcell(&[
        "sweep",
        "--preset",
        "figure2",
        "--out",
        fig2.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&fig2).unwrap();
    assert!(text.starts_with("p,t_p\n"));
}

#[test]
fn sweep_single_point_range() {
    let out = progcell(&[
        "sweep",
        "--variable",
        "q",
        "--start",
        "0.5",
        "--stop",
        "0.5",
        "--step",
        "0.1",
        "--p",
        "0.2",
        "--t",
        "1",
    ]);
    assert!(out.status.success());
    let text = stdout_str(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2, "expected header plus one row, got: {text}");
    assert_eq!(lines[0], "q,capacity");
    // C(q=0.5, t=1) = q * (1 - h(0.2))
    let cap: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    let h02 = -(0.2f64.log2() * 0.2) - 0.8 * 0.8f64.log2();
    assert!((cap - 0.5 * (1.0 - h02)).abs() < 1e-9);
}

#[test]
fn simulate_is_bit_identical_across_workers_and_env_seed() {
    let base = &[
        "simulate",
        "--channel",
        "bsc",
        "--p",
        "0.1",
        "--scheme",
        r#"{"parts":[{"beta":1,"t":-1}]}"#,
        "--n",
        "100000",
    ];
    let mut with_seed = base.to_vec();
    with_seed.extend_from_slice(&["--seed", "9"]);
    let one = progcell(&with_seed);
    assert!(one.status.success());

    let mut with_workers = with_seed.clone();
    with_workers.extend_from_slice(&["--workers", "4"]);
    let four = progcell(&with_workers);
    assert_eq!(one.stdout, four.stdout);

    // Environment fallback for the seed.
    let env_run = Command::new(env!("CARGO_BIN_EXE_progcell"))
        .args(base)
        .env("PROGCELL_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(one.stdout, env_run.stdout);

    let report = json_value(&one);
    assert!((report["mean_attempts"].as_f64().unwrap() - 1.0 / 0.9).abs() < 0.01);
}

#[test]
fn oracle_ba_outputs() {
    let out = progcell(&["oracle", "ba", "--matrix", "identity2"]);
    assert!(out.status.success());
    let result = json_value(&out);
    assert!((result["capacity"].as_f64().unwrap() - 1.0).abs() < 1e-9);

    let out = progcell(&["oracle", "ba", "--matrix", "bsc", "--p", "0.25", "--t", "2"]);
    assert!((json_value(&out)["capacity"].as_f64().unwrap() - 0.6627).abs() < 1e-3);

    let out = progcell(&["oracle", "ba", "--matrix-json", "[[0.9,0.1],[0.2,0.8]]"]);
    assert!(out.status.success());

    // Starved iteration budget reports a numeric failure.
    let out = progcell(&[
        "oracle",
        "ba",
        "--matrix",
        "z",
        "--p",
        "0.5",
        "--max-iter",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn oracle_cross_single_case() {
    let out = progcell(&[
        "oracle",
        "cross",
        "--problem",
        "f3",
        "--p",
        "0.2",
        "--D",
        "2",
        "--T",
        "3",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout_str(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "problem,params,solver_value,best_grid_value,gap");
    assert_eq!(lines.len(), 2);

    let out = progcell(&[
        "oracle",
        "cross",
        "--problem",
        "f1",
        "--channel",
        "bec",
        "--p",
        "0.3",
        "--D",
        "1.5",
        "--T",
        "4",
    ]);
    assert!(out.status.success());
}
