//! Streams a sparse Gaussian-linear model batch by batch and prints the
//! selected set, λ and squared ℓ₂ error after each batch.
//!
//! ```text
//! cargo run --release --example gaussian_stream [seed]
//! ```

use renewglm::simulation::{gen_batch, l2_error, replication_rng, true_beta, ExperimentConfig};
use renewglm::{Family, PenaltyConfig, SolverConfig, SolverState};

fn main() -> renewglm::Result<()> {
    let seed = std::env::args().nth(1).map_or(1, |s| s.parse().expect("seed must be an integer"));
    let solver = SolverConfig::new(PenaltyConfig::scad(3.7));
    let mut design = ExperimentConfig::new(Family::GaussianIdentity, solver.clone());
    design.p = 20;
    let beta0 = true_beta(design.p, design.family)?;
    let mut rng = replication_rng(seed, 0);

    let first = gen_batch(&design, beta0.view(), 500, 1, &mut rng)?;
    let (mut state, _) = SolverState::init_first_batch(&first, &solver, design.family)?;
    println!("batch   N      lambda  active");
    for b in 2..=30 {
        let batch = gen_batch(&design, beta0.view(), 100, b, &mut rng)?;
        let trace = state.process_batch(&batch, &solver)?;
        if b % 5 == 0 {
            println!(
                "{b:>5} {:>5} {:>10.3}  {:?}  l2^2 = {:.5}",
                state.samples(),
                trace.chosen_lambda,
                state.active(),
                l2_error(state.beta(), beta0.view())?
            );
        }
    }
    println!("beta_hat[0..6] = {:.4}", state.beta().slice(ndarray::s![0..6]));
    Ok(())
}
