//! Suspends a stream to a checkpoint halfway, resumes it from the file, and
//! checks that the final state is bit-identical to an uninterrupted run.
//!
//! ```text
//! cargo run --release --example checkpoint_resume
//! ```

use renewglm::persistence::{load_checkpoint, save_checkpoint};
use renewglm::simulation::{gen_batch, replication_rng, true_beta, ExperimentConfig};
use renewglm::{Batch, Family, PenaltyConfig, SolverConfig, SolverState};

fn main() -> renewglm::Result<()> {
    let solver = SolverConfig::new(PenaltyConfig::scad(3.7));
    let design = ExperimentConfig::new(Family::BinomialLogit, solver.clone());
    let beta0 = true_beta(design.p, design.family)?;
    let mut rng = replication_rng(3, 0);
    let batches: Vec<Batch> = (1..=10)
        .map(|b| gen_batch(&design, beta0.view(), if b == 1 { 1000 } else { 200 }, b, &mut rng))
        .collect::<renewglm::Result<_>>()?;

    let (mut straight, _) = SolverState::init_first_batch(&batches[0], &solver, design.family)?;
    for batch in &batches[1..] {
        straight.process_batch(batch, &solver)?;
    }

    let (mut first_half, _) = SolverState::init_first_batch(&batches[0], &solver, design.family)?;
    for batch in &batches[1..5] {
        first_half.process_batch(batch, &solver)?;
    }
    let dir = tempfile::tempdir()?;
    let path = dir.path().join("stream.ckpt");
    save_checkpoint(&first_half, &solver, std::fs::File::create(&path)?)?;
    drop(first_half);
    println!("checkpoint after batch 5: {} bytes", std::fs::metadata(&path)?.len());

    let (mut resumed, stored_config) = load_checkpoint(std::fs::File::open(&path)?)?;
    assert_eq!(stored_config, solver);
    for batch in &batches[5..] {
        resumed.process_batch(batch, &stored_config)?;
    }
    let identical = resumed == straight
        && resumed
            .beta()
            .iter()
            .zip(straight.beta().iter())
            .all(|(a, b)| a.to_bits() == b.to_bits());
    println!("active = {:?}", resumed.active());
    println!("resumed run bit-identical to uninterrupted run: {identical}");
    assert!(identical);
    Ok(())
}
