//! Writes a stream as CSV batch files, then reads them back one at a time
//! and fits them, the way the `fit` command does.
//!
//! ```text
//! cargo run --release --example csv_stream
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter};

use renewglm::persistence::{read_batch, write_batch};
use renewglm::simulation::{gen_batch, replication_rng, true_beta, ExperimentConfig};
use renewglm::{Family, PenaltyConfig, SolverConfig, SolverState};

fn main() -> renewglm::Result<()> {
    let solver = SolverConfig::new(PenaltyConfig::lasso());
    let design = ExperimentConfig::new(Family::GaussianIdentity, solver.clone());
    let beta0 = true_beta(design.p, design.family)?;
    let mut rng = replication_rng(9, 0);
    let dir = tempfile::tempdir()?;

    let mut paths = Vec::new();
    for b in 1..=8 {
        let batch = gen_batch(&design, beta0.view(), 250, b, &mut rng)?;
        let path = dir.path().join(format!("batch_{b:02}.csv"));
        write_batch(&batch, None, BufWriter::new(File::create(&path)?))?;
        paths.push(path);
    }

    let mut state: Option<SolverState> = None;
    for (i, path) in paths.iter().enumerate() {
        let (header, batch) = read_batch(BufReader::new(File::open(path)?), i + 1)?;
        match state.as_mut() {
            None => {
                println!("columns: {}", header.join(","));
                state = Some(SolverState::init_first_batch(&batch, &solver, design.family)?.0);
            }
            Some(s) => {
                s.process_batch(&batch, &solver)?;
            }
        }
    }
    let state = state.expect("at least one batch");
    println!("N = {}, active = {:?}", state.samples(), state.active());
    println!("beta_hat = {:.3}", state.beta());
    Ok(())
}
