mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use renewglm::cli::{coefficients_tsv, lambda_history_tsv};
use renewglm::persistence::write_batch;
use renewglm::{Family, PenaltyConfig, SolverConfig, SolverState};

fn bin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_renewglm"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes a simulated stream as `batch_k.csv` files and returns their names.
fn write_stream(dir: &Path, family: Family, sizes: &[usize], seed: u64) -> Vec<String> {
    common::stream(family, 10, sizes, seed)
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let name = format!("batch_{}.csv", i + 1);
            write_batch(b, None, fs::File::create(dir.join(&name)).unwrap()).unwrap();
            name
        })
        .collect()
}

fn args<'a>(head: &[&'a str], files: &'a [String]) -> Vec<&'a str> {
    head.iter().copied().chain(files.iter().map(String::as_str)).collect()
}

#[test]
fn fit_matches_in_process_run() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_stream(dir.path(), Family::GaussianIdentity, &[400, 120], 1);
    let out = bin(&args(&["fit", "--family", "gaussian", "--penalty", "lasso", "--out", "res"], &files), dir.path());
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let batches = common::stream(Family::GaussianIdentity, 10, &[400, 120], 1);
    let config = SolverConfig::new(PenaltyConfig::lasso());
    let (mut state, _) = SolverState::init_first_batch(&batches[0], &config, Family::GaussianIdentity).unwrap();
    state.process_batch(&batches[1], &config).unwrap();
    let res = dir.path().join("res");
    assert_eq!(fs::read_to_string(res.join("coefficients.tsv")).unwrap(), coefficients_tsv(&state));
    assert_eq!(fs::read_to_string(res.join("lambda_history.tsv")).unwrap(), lambda_history_tsv(&state));
    let trace = fs::read_to_string(res.join("bic_trace.tsv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 2 * 100);
    assert_eq!(trace.lines().filter(|l| l.ends_with("\t1")).count(), 2);
}

#[test]
fn fit_then_resume_equals_single_fit() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_stream(dir.path(), Family::BinomialLogit, &[800, 100, 100, 100, 100], 2);
    let d = dir.path();
    let all = bin(&args(&["fit", "--family", "logit", "--penalty", "scad", "--out", "all", "--checkpoint", "all.ckpt"], &files), d);
    assert_eq!(code(&all), 0, "{}", stderr(&all));
    let head = bin(&args(&["fit", "--family", "logit", "--penalty", "scad", "--out", "head", "--checkpoint", "s.ckpt"], &files[..2]), d);
    assert_eq!(code(&head), 0, "{}", stderr(&head));
    let tail = bin(&args(&["resume", "--from", "s.ckpt", "--out", "tail", "--checkpoint", "s.ckpt"], &files[2..]), d);
    assert_eq!(code(&tail), 0, "{}", stderr(&tail));
    let read = |p: &str| fs::read(d.join(p)).unwrap();
    assert_eq!(read("all/coefficients.tsv"), read("tail/coefficients.tsv"));
    assert_eq!(read("all/lambda_history.tsv"), read("tail/lambda_history.tsv"));
    assert_eq!(read("all.ckpt"), read("s.ckpt"));
}

#[test]
fn missing_input_exits_2_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["fit", "--out", "res", "nowhere.csv"], dir.path());
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("nowhere.csv"));
    assert!(!dir.path().join("res").exists());
}

#[test]
fn failed_stream_leaves_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = write_stream(dir.path(), Family::GaussianIdentity, &[300, 50], 3);
    fs::write(dir.path().join("bad.csv"), "y,x1\n1,2\n").unwrap();
    files.push("bad.csv".into());
    let out = bin(&args(&["fit", "--out", "res", "--checkpoint", "c.ckpt"], &files), dir.path());
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("dimension mismatch"));
    assert!(!dir.path().join("res").exists());
    assert!(!dir.path().join("c.ckpt").exists());
}

#[test]
fn exit_code_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("ragged.csv"), "y,x1,x2\n1,2,3\n4,5\n").unwrap();
    fs::write(d.join("zero.csv"), "y,x1,x2\n1,0,0\n2,0,0\n").unwrap();
    fs::write(d.join("bad.ckpt"), "renewglm-checkpoint format_version 9\n").unwrap();
    fs::write(d.join("empty.tsv"), "").unwrap();
    let cases: Vec<(Vec<&str>, i32, &str)> = vec![
        (vec!["fit", "--out", "o", "ragged.csv"], 2, "row 2"),
        (vec!["fit", "--out", "o", "zero.csv"], 1, "degenerate"),
        (vec!["fit", "--penalty", "scad", "--r", "1.5", "--out", "o", "ragged.csv"], 2, "r > 2"),
        (vec!["fit", "--penalty", "ridge", "--out", "o", "ragged.csv"], 2, "ridge"),
        (vec!["fit", "--out", "o"], 2, "FILES"),
        (vec!["resume", "--from", "bad.ckpt", "--out", "o", "zero.csv"], 2, "version 9"),
        (vec!["simulate", "--p", "4", "--out", "o"], 2, "p must be"),
        (vec!["simulate", "--rho", "1.5", "--out", "o"], 2, "rho"),
        (vec!["report", "empty.tsv"], 2, "empty"),
        (vec!["report", "absent.tsv"], 2, "absent.tsv"),
        (vec!["frobnicate"], 2, "unrecognized"),
    ];
    for (argv, expected, needle) in cases {
        let out = bin(&argv, d);
        assert_eq!(code(&out), expected, "{argv:?}: {}", stderr(&out));
        assert!(stderr(&out).contains(needle), "{argv:?}: {}", stderr(&out));
    }
    assert!(!d.join("o").exists());
}

fn simulate(dir: &Path, out: &str) -> PathBuf {
    let o = bin(
        &["simulate", "--p", "10", "--n", "100", "--batches", "12", "--penalty", "mcp", "--reps", "5", "--seed", "42", "--warm-start", "100", "--out", out],
        dir,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    dir.join(out)
}

#[test]
fn simulate_is_deterministic_and_report_aggregates_records() {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "a");
    let b = simulate(dir.path(), "b");
    let metrics = fs::read_to_string(a.join("metrics.tsv")).unwrap();
    assert_eq!(metrics, fs::read_to_string(b.join("metrics.tsv")).unwrap());
    assert_eq!(fs::read(a.join("records.tsv")).unwrap(), fs::read(b.join("records.tsv")).unwrap());
    assert_eq!(metrics.lines().next().unwrap(), "Size\tMethod\tNV\tIN\tCS\tI\tII");

    let o = bin(&["report", "a/records.tsv", "--out", "series.tsv"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let series = fs::read_to_string(dir.path().join("series.tsv")).unwrap();
    let rows: Vec<Vec<String>> = series
        .lines()
        .skip(1)
        .map(|l| l.split('\t').map(str::to_string).collect())
        .collect();
    assert_eq!(rows.len(), 12);

    // Independent aggregation of the raw records.
    let records = fs::read_to_string(a.join("records.tsv")).unwrap();
    for row in &rows {
        let vals: Vec<f64> = records
            .lines()
            .skip(1)
            .map(|l| l.split('\t').collect::<Vec<_>>())
            .filter(|f| f[0] == row[0] && f[3] == row[1])
            .map(|f| f[4].parse().unwrap())
            .collect();
        assert_eq!(vals.len(), 5);
        let mean: f64 = vals.iter().sum::<f64>() / 5.0;
        let got: f64 = row[2].parse().unwrap();
        assert!((got - mean).abs() <= 1e-15 * mean.abs().max(1.0));
    }
}

#[test]
fn report_of_one_replication_has_one_point_per_batch() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(
        &["simulate", "--batches", "8", "--penalty", "lasso", "--reps", "1", "--warm-start", "0", "--out", "s"],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = bin(&["report", "s/records.tsv"], dir.path());
    assert_eq!(code(&o), 0);
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1 + 8);
    assert!(stdout.lines().skip(1).all(|l| l.starts_with("Renew_LASSO\t")));
}
