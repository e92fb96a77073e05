//! Streams a sparse logistic model with each of the three penalties and
//! reports the final selection and squared ℓ₂ error.
//!
//! ```text
//! cargo run --release --example logistic_stream
//! ```

use renewglm::simulation::{gen_batch, l2_error, replication_rng, true_beta, ExperimentConfig};
use renewglm::{Family, PenaltyConfig, SolverConfig, SolverState};

fn main() -> renewglm::Result<()> {
    for penalty in [PenaltyConfig::lasso(), PenaltyConfig::scad(3.7), PenaltyConfig::mcp(3.0)] {
        let solver = SolverConfig::new(penalty);
        let design = ExperimentConfig::new(Family::BinomialLogit, solver.clone());
        let beta0 = true_beta(design.p, design.family)?;
        let mut rng = replication_rng(11, 0);

        let first = gen_batch(&design, beta0.view(), 1000, 1, &mut rng)?;
        let (mut state, _) = SolverState::init_first_batch(&first, &solver, design.family)?;
        for b in 2..=40 {
            let batch = gen_batch(&design, beta0.view(), 100, b, &mut rng)?;
            state.process_batch(&batch, &solver)?;
        }
        println!(
            "{:<5} N = {}  active = {:?}  l2^2 = {:.4}",
            penalty.kind.label(),
            state.samples(),
            state.active(),
            l2_error(state.beta(), beta0.view())?
        );
    }
    Ok(())
}
