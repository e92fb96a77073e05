//! Selection table for the logistic design: p = 10, n = 100 per batch,
//! B = 50 batches, one row per penalty plus the pooled offline reference.
//!
//! ```text
//! cargo run --release --example table_logistic [replications]
//! ```

use renewglm::simulation::{run_experiment, write_metrics_tsv, ExperimentConfig};
use renewglm::{Family, PenaltyConfig, SolverConfig};

fn main() -> renewglm::Result<()> {
    let replications = std::env::args().nth(1).map_or(20, |s| s.parse().expect("integer"));
    let mut results = Vec::new();
    for penalty in [PenaltyConfig::lasso(), PenaltyConfig::scad(3.7), PenaltyConfig::mcp(3.0)] {
        let mut config = ExperimentConfig::new(Family::BinomialLogit, SolverConfig::new(penalty));
        config.replications = replications;
        config.offline_reference = true;
        results.push(run_experiment(&config)?);
    }
    write_metrics_tsv(&results, &mut std::io::stdout().lock())
}
