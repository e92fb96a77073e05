//! MCP on a p = 100 Gaussian design with n = 50 per batch: selection
//! metrics over a handful of replications.
//!
//! ```text
//! cargo run --release --example high_dimensional [replications]
//! ```

use renewglm::simulation::{run_experiment, write_metrics_tsv, ExperimentConfig};
use renewglm::{Family, PenaltyConfig, SolverConfig};

fn main() -> renewglm::Result<()> {
    let replications = std::env::args().nth(1).map_or(10, |s| s.parse().expect("integer"));
    let mut config = ExperimentConfig::new(Family::GaussianIdentity, SolverConfig::new(PenaltyConfig::mcp(3.0)));
    config.p = 100;
    config.n = 50;
    config.batches = 40;
    config.replications = replications;
    let result = run_experiment(&config)?;
    write_metrics_tsv(&[result], &mut std::io::stdout().lock())
}
