//! Runs the quick examples; `cargo test` builds them alongside the tests.

use std::path::PathBuf;
use std::process::Command;

fn example(name: &str) -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|deps| deps.parent()).unwrap();
    profile_dir.join("examples").join(format!("{name}{}", std::env::consts::EXE_SUFFIX))
}

fn run(name: &str, args: &[&str]) -> String {
    let path = example(name);
    assert!(path.exists(), "example binary {} not built", path.display());
    let out = Command::new(&path).args(args).output().unwrap();
    assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn thresholding() {
    assert!(run("thresholding", &[]).contains("hard threshold"));
}

#[test]
fn gaussian_stream() {
    assert!(run("gaussian_stream", &["2"]).contains("beta_hat"));
}

#[test]
fn logistic_stream() {
    assert_eq!(run("logistic_stream", &[]).lines().count(), 3);
}

#[test]
fn bic_path() {
    assert!(run("bic_path", &[]).contains("chosen lambda"));
}

#[test]
fn checkpoint_resume() {
    assert!(run("checkpoint_resume", &[]).contains("bit-identical to uninterrupted run: true"));
}

#[test]
fn csv_stream() {
    assert!(run("csv_stream", &[]).contains("columns: y,x1"));
}

#[test]
fn r_squared_holdout() {
    assert!(run("r_squared_holdout", &[]).contains("streamed fit"));
}

#[test]
fn tables_with_few_replications() {
    for name in ["table_gaussian", "table_logistic", "high_dimensional"] {
        assert!(run(name, &["2"]).starts_with("Size\tMethod\tNV\tIN\tCS\tI\tII\n"));
    }
    assert!(run("root_n_rate", &["2"]).contains("N * l2^2"));
}

#[test]
fn full_scale_is_opt_in() {
    assert_eq!(run("full_scale", &[]), "");
}
