//! Out-of-sample R² of a streamed Gaussian fit on a fresh holdout batch,
//! next to the R² of the true coefficients.
//!
//! ```text
//! cargo run --release --example r_squared_holdout
//! ```

use renewglm::simulation::{gen_batch, r_squared, replication_rng, true_beta, ExperimentConfig};
use renewglm::{Family, PenaltyConfig, SolverConfig, SolverState};

fn main() -> renewglm::Result<()> {
    let solver = SolverConfig::new(PenaltyConfig::mcp(3.0));
    let mut design = ExperimentConfig::new(Family::GaussianIdentity, solver.clone());
    design.p = 50;
    let beta0 = true_beta(design.p, design.family)?;
    let mut rng = replication_rng(21, 0);

    let first = gen_batch(&design, beta0.view(), 1000, 1, &mut rng)?;
    let (mut state, _) = SolverState::init_first_batch(&first, &solver, design.family)?;
    for b in 2..=20 {
        state.process_batch(&gen_batch(&design, beta0.view(), 100, b, &mut rng)?, &solver)?;
    }

    let holdout = gen_batch(&design, beta0.view(), 5000, 1, &mut rng)?;
    let fitted = holdout.x().dot(&state.beta());
    let oracle = holdout.x().dot(&beta0);
    println!("active = {:?}", state.active());
    println!("holdout R^2, streamed fit: {:.4}", r_squared(holdout.y(), fitted.view())?);
    println!("holdout R^2, true beta:    {:.4}", r_squared(holdout.y(), oracle.view())?);
    Ok(())
}
