//! End-to-end tests of the cp-wald binary: exit codes, file round trips,
//! config layering, determinism across thread counts.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cp-wald"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn usage_errors_exit_2() {
    // no subcommand
    let o = run(&[]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    // unknown flag
    let o = run(&["simulate", "--nope"]);
    assert_eq!(o.status.code(), Some(2));
    // missing required seed
    let o = run(&["simulate", "--d", "0.2", "--n", "50"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    // scan without input
    let o = run(&["scan"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_1() {
    let o = run(&["scan", "--input", "/nonexistent/series.csv"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    // domain error: d outside the stationary range
    let o = run(&["simulate", "--d", "0.9", "--n", "50", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn simulate_scan_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("y.csv");
    let o = run(&[
        "simulate",
        "--d",
        "0.2",
        "--n",
        "300",
        "--seed",
        "42",
        "--out",
        series.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&series).unwrap();
    assert_eq!(text.lines().count(), 300);

    let o = run(&["scan", "--input", series.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["schema"], "cp-wald/1");
    assert_eq!(v["kind"], "scan-summary");
    assert_eq!(v["n"], 300);
    let p = v["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert!(v["provenance"].as_str().unwrap().starts_with("fnv1a:"));
}

#[test]
fn scan_reject_exit_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("break.csv");
    // blatant break: two independent stationary halves with distant d
    let o = run(&[
        "simulate",
        "--d",
        "0.05",
        "--n",
        "250",
        "--seed",
        "7",
        "--out",
        series.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let first = fs::read_to_string(&series).unwrap();
    let o = run(&[
        "simulate",
        "--d",
        "0.45",
        "--n",
        "250",
        "--seed",
        "8",
        "--out",
        series.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let second = fs::read_to_string(&series).unwrap();
    fs::write(&series, format!("{first}{second}")).unwrap();

    let o = run(&[
        "scan",
        "--input",
        series.to_str().unwrap(),
        "--reject-exit",
        "0.05",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    // a pure null path should keep exit 0 even with --reject-exit at 1e-6
    let null_series = dir.path().join("null.csv");
    run(&[
        "simulate",
        "--d",
        "0.2",
        "--n",
        "300",
        "--seed",
        "9",
        "--out",
        null_series.to_str().unwrap(),
    ]);
    let o = run(&[
        "scan",
        "--input",
        null_series.to_str().unwrap(),
        "--reject-exit",
        "0.000001",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn fit_reports_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("y.csv");
    run(&[
        "simulate",
        "--d",
        "0.3",
        "--n",
        "1500",
        "--seed",
        "11",
        "--out",
        series.to_str().unwrap(),
    ]);
    let o = run(&["fit", "--input", series.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["kind"], "fit");
    let d_hat = v["lambda_hat"][0].as_f64().unwrap();
    assert!((d_hat - 0.3).abs() < 0.1, "d_hat = {d_hat}");
    assert_eq!(v["converged"], true);
}

#[test]
fn config_fills_only_missing_slots_and_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# defaults\nd = 0.30\nn = 120\n").unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");

    // config supplies d and n
    let o = bin()
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "simulate",
            "--seed",
            "5",
            "--out",
            out_a.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(&out_a).unwrap().lines().count(), 120);

    // CLI overrides config's n
    let o = bin()
        .args([
            "--config",
            cfg.to_str().unwrap(),
            "simulate",
            "--seed",
            "5",
            "--n",
            "80",
            "--out",
            out_b.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&out_b).unwrap().lines().count(), 80);

    // unknown key is rejected
    let bad = dir.path().join("bad.conf");
    fs::write(&bad, "d = 0.3\nwat.is = this\n").unwrap();
    let o = bin()
        .args([
            "--config",
            bad.to_str().unwrap(),
            "simulate",
            "--seed",
            "5",
            "--n",
            "50",
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("wat.is"), "{}", stderr(&o));
}

#[test]
fn ingest_rejects_malformed_rows_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("bad.csv");
    fs::write(&series, "1.0\n2.0\nnot-a-number\n4.0\n").unwrap();
    let o = run(&["scan", "--input", series.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    // header line is tolerated only at the top
    let with_header = dir.path().join("hdr.csv");
    let body: String = (0..60).map(|i| format!("{}.5\n", i % 7)).collect();
    fs::write(&with_header, format!("value\n{body}")).unwrap();
    let o = run(&["fit", "--input", with_header.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn emitted_json_is_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut outs = Vec::new();
    for threads in ["1", "2"] {
        let o = bin()
            .env("CP_WALD_THREADS", threads)
            .args([
                "table1",
                "--n",
                "100",
                "--reps",
                "8",
                "--d0",
                "0.2",
                "--seed",
                "33",
                "--format",
                "json",
            ])
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        outs.push(stdout(&o));
    }
    assert_eq!(outs[0], outs[1], "thread count changed emitted bytes");
    let v: serde_json::Value = serde_json::from_str(outs[0].lines().next().unwrap()).unwrap();
    assert_eq!(v["schema"], "cp-wald/1");
}

#[test]
fn invalid_thread_env_is_a_usage_error() {
    let o = bin()
        .env("CP_WALD_THREADS", "zero")
        .args(["simulate", "--d", "0.2", "--n", "20", "--seed", "1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn ned_commands_emit_reports() {
    let dir = tempfile::tempdir().unwrap();
    // rate on an AR(1)-squared generator at the minimum allowed n
    let o = run(&[
        "ned",
        "rate",
        "--generator",
        "ar1-squared:0.6",
        "--n",
        "4000",
        "--seed",
        "3",
        "--direction",
        "backward",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["kind"], "ned-rate");
    assert!(v["delta_hat"].as_f64().unwrap().is_finite());

    // paths CSV
    let paths = dir.path().join("paths.csv");
    let o = run(&[
        "ned",
        "paths",
        "--generator",
        "farima-score:0.3",
        "--n",
        "2000",
        "--seed",
        "3",
        "--csv",
        paths.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&paths).unwrap();
    assert!(text.starts_with("k,"), "{}", &text[..40.min(text.len())]);
    assert!(text.lines().count() > 10);

    // gaussian-max with small reps
    let o = run(&[
        "ned",
        "gaussian-max",
        "--generator",
        "ar1-score:0.5",
        "--n",
        "1200",
        "--reps",
        "20",
        "--seed",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["kind"], "ned-gaussian-max");
    // level generator must be refused (not a martingale-difference score)
    let o = run(&[
        "ned",
        "gaussian-max",
        "--generator",
        "ar1-level:0.5",
        "--n",
        "1200",
        "--reps",
        "5",
        "--seed",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn doc_lint_passes_on_repo_docs() {
    let repo_docs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/method-notes.md");
    let o = run(&["doc-lint", "--docs", repo_docs.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["kind"], "doc-lint");
    assert_eq!(v["missing"].as_array().unwrap().len(), 0);
}
