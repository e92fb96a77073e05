mod common;

use std::io::Cursor;

use ndarray::{array, Array1, Array2};
use rand::Rng;
use renewglm::persistence::{checkpoint_string, load_checkpoint, parse_checkpoint, read_batch, write_batch};
use renewglm::{Batch, Error, Family, PenaltyConfig, SolverConfig, SolverState};

#[test]
fn reads_minimal_file() {
    let (header, b) = read_batch(Cursor::new("y,x1,x2\n2,1,0\n"), 1).unwrap();
    assert_eq!(header, ["y", "x1", "x2"]);
    assert_eq!(b.y(), array![2.0]);
    assert_eq!(b.x(), array![[1.0, 0.0]]);
}

fn parse_error(text: &str) -> String {
    match read_batch(Cursor::new(text.to_string()), 1) {
        Err(Error::Parse { location, message }) => format!("{location}: {message}"),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn malformed_files_name_the_row() {
    assert!(parse_error("y,x1,x2\n1,2,3\n4,5\n").starts_with("row 2"));
    assert!(parse_error("y,x1\n1,2\n3,4\n5,abc\n").starts_with("row 3"));
    assert!(parse_error("y,x1\n1,2\n,4\n").starts_with("row 2"));
    assert!(parse_error("y,x1\n1,NaN\n").starts_with("row 1"));
    assert!(parse_error("").starts_with("header"));
    assert!(parse_error("y,x1\n").contains("no data rows"));
    assert!(parse_error("y\n1\n").starts_with("header"));
}

#[test]
fn large_batch_round_trips_exactly() {
    let mut r = common::rng(77);
    let n = 100_000;
    let x = Array2::from_shape_fn((n, 4), |_| r.random_range(-1e3..1e3) * r.random::<f64>());
    let y = Array1::from_shape_fn(n, |_| r.random::<f64>() - 0.5);
    let batch = Batch::new(y, x, 3).unwrap();
    let mut buf = Vec::new();
    write_batch(&batch, None, &mut buf).unwrap();
    let (header, back) = read_batch(Cursor::new(buf), 3).unwrap();
    assert_eq!(header, ["y", "x1", "x2", "x3", "x4"]);
    assert_eq!(back, batch);
}

fn stream_state(family: Family, penalty: PenaltyConfig, sizes: &[usize], seed: u64) -> (SolverState, SolverConfig) {
    let batches = common::stream(family, 10, sizes, seed);
    let config = SolverConfig::new(penalty);
    let (mut state, _) = SolverState::init_first_batch(&batches[0], &config, family).unwrap();
    for b in &batches[1..] {
        state.process_batch(b, &config).unwrap();
    }
    (state, config)
}

#[test]
fn checkpoint_reserializes_byte_identically() {
    let (state, config) = stream_state(Family::BinomialLogit, PenaltyConfig::mcp(2.5), &[800, 100, 100, 100], 6);
    let first = checkpoint_string(&state, &config);
    let (loaded, loaded_config) = parse_checkpoint(&first).unwrap();
    assert_eq!(loaded, state);
    assert_eq!(loaded_config, config);
    assert_eq!(checkpoint_string(&loaded, &loaded_config), first);
    for (a, b) in loaded.beta().iter().zip(state.beta().iter()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn pinned_configuration_survives_round_trip() {
    let batches = common::stream(Family::GaussianIdentity, 10, &[300, 60], 8);
    let mut config = SolverConfig::new(PenaltyConfig::scad(3.7));
    config.pinned_active = Some(vec![0, 3, 7]);
    config.penalize_intercept = false;
    let (mut state, _) = SolverState::init_first_batch(&batches[0], &config, Family::GaussianIdentity).unwrap();
    state.process_batch(&batches[1], &config).unwrap();
    let (loaded, loaded_config) = parse_checkpoint(&checkpoint_string(&state, &config)).unwrap();
    assert_eq!((loaded, loaded_config), (state, config));
}

#[test]
fn resumed_stream_matches_uninterrupted_run() {
    assert!(common::resume_is_bit_identical(Family::GaussianIdentity, PenaltyConfig::lasso(), 1));
    assert!(common::resume_is_bit_identical(Family::BinomialLogit, PenaltyConfig::scad(3.7), 2));
}

#[test]
fn damaged_checkpoints_are_rejected() {
    let (state, config) = stream_state(Family::GaussianIdentity, PenaltyConfig::scad(3.7), &[500, 100], 3);
    let text = checkpoint_string(&state, &config);

    let truncated = &text[..text.len() / 2];
    assert!(matches!(parse_checkpoint(truncated), Err(Error::Corrupt(_))));
    let no_trailer = &text[..text.rfind("sha256").unwrap()];
    assert!(matches!(parse_checkpoint(no_trailer), Err(Error::Corrupt(_))));
    assert!(matches!(parse_checkpoint(""), Err(Error::Corrupt(_))));
    assert!(matches!(load_checkpoint(Cursor::new(vec![0xff, 0xfe])), Err(Error::Corrupt(_))));

    let flipped = text.replacen("samples 600", "samples 601", 1);
    assert_ne!(flipped, text);
    assert!(matches!(parse_checkpoint(&flipped), Err(Error::Corrupt(m)) if m.contains("checksum")));

    let future = text.replacen("format_version 1", "format_version 2", 1);
    assert!(matches!(parse_checkpoint(&future), Err(Error::UnsupportedVersion(2))));
}

#[test]
fn checkpoint_size_does_not_grow_with_sample_size() {
    let mut config = SolverConfig::new(PenaltyConfig::mcp(3.0));
    config.pinned_active = Some(vec![0, 1, 2, 3, 4]);
    let size = |scale: usize| {
        let sizes = [10 * scale, 3 * scale, 3 * scale, 3 * scale];
        let batches = common::stream(Family::GaussianIdentity, 10, &sizes, 4);
        let (mut state, _) = SolverState::init_first_batch(&batches[0], &config, Family::GaussianIdentity).unwrap();
        for b in &batches[1..] {
            state.process_batch(b, &config).unwrap();
        }
        checkpoint_string(&state, &config).len()
    };
    let (small, large) = (size(100), size(10_000));
    // N grows a hundredfold; only digit counts differ.
    assert!(large.abs_diff(small) < 64, "{small} vs {large} bytes");
}
