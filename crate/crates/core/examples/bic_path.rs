//! The online BIC along the λ grid for a single incoming batch, split into
//! its complexity, carry-over and misfit terms.
//!
//! ```text
//! cargo run --release --example bic_path
//! ```

use renewglm::simulation::{gen_batch, replication_rng, true_beta, ExperimentConfig};
use renewglm::tuning::{bic_terms, select_lambda};
use renewglm::{Family, PenaltyConfig, SolverConfig, SolverState};

fn main() -> renewglm::Result<()> {
    let solver = SolverConfig::new(PenaltyConfig::mcp(3.0));
    let design = ExperimentConfig::new(Family::GaussianIdentity, solver.clone());
    let beta0 = true_beta(design.p, design.family)?;
    let mut rng = replication_rng(5, 0);

    let first = gen_batch(&design, beta0.view(), 1000, 1, &mut rng)?;
    let (state, _) = SolverState::init_first_batch(&first, &solver, design.family)?;
    let batch = gen_batch(&design, beta0.view(), 100, 2, &mut rng)?;

    let (chosen, trace) = select_lambda(&state, &batch, &solver)?;
    println!("{:>10} {:>3} {:>10} {:>10} {:>10} {:>10}", "lambda", "s", "complex", "carry", "misfit", "bic");
    for (i, &lambda) in trace.lambdas.iter().enumerate().step_by(9) {
        let candidate = state.coordinate_descent(&batch, lambda, &solver)?;
        let t = bic_terms(&state, &batch, candidate.view())?;
        println!(
            "{lambda:>10.3} {:>3} {:>10.2} {:>10.2} {:>10.2} {:>10.2}",
            trace.s_hat_per_lambda[i],
            t.complexity,
            t.carry_over,
            t.misfit,
            t.total()
        );
    }
    println!("chosen lambda = {chosen:.3} (grid index {})", trace.chosen_index);
    Ok(())
}
