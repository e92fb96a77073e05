//! Selection table for the Gaussian design: p = 10, n = 100 per batch,
//! B = 50 batches, 20 replications, one row per penalty plus the pooled
//! offline reference.
//!
//! ```text
//! cargo run --release --example table_gaussian [replications]
//! ```

use renewglm::simulation::{run_experiment, write_metrics_tsv, ExperimentConfig};
use renewglm::{Family, PenaltyConfig, SolverConfig};

fn main() -> renewglm::Result<()> {
    let replications = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("replications must be an integer"))
        .unwrap_or(20);
    let mut results = Vec::new();
    for penalty in [PenaltyConfig::lasso(), PenaltyConfig::scad(3.7), PenaltyConfig::mcp(3.0)] {
        let mut config = ExperimentConfig::new(Family::GaussianIdentity, SolverConfig::new(penalty));
        config.replications = replications;
        config.offline_reference = true;
        let result = run_experiment(&config)?;
        eprintln!(
            "{}: mean squared l2 error {:.5}, failures {}",
            config.method_name(),
            result.online.l2_sq,
            result.failures.len()
        );
        results.push(result);
    }
    write_metrics_tsv(&results, &mut std::io::stdout().lock())
}
