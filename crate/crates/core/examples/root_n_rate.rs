//! Mean squared ℓ₂ error against accumulated sample size for a Gaussian
//! stream. Quadrupling `N` should cut the error by about four.
//!
//! ```text
//! cargo run --release --example root_n_rate [replications]
//! ```

use renewglm::simulation::{run_experiment, ExperimentConfig};
use renewglm::{Family, PenaltyConfig, SolverConfig};

fn main() -> renewglm::Result<()> {
    let replications = std::env::args().nth(1).map_or(30, |s| s.parse().expect("integer"));
    let mut config = ExperimentConfig::new(Family::GaussianIdentity, SolverConfig::new(PenaltyConfig::scad(3.7)));
    config.n = 200;
    config.batches = 80;
    config.replications = replications;
    let result = run_experiment(&config)?;

    println!("{:>6} {:>12} {:>12}", "N", "mean l2^2", "N * l2^2");
    let points = result.records[0].path.len();
    for k in 0..points {
        let n = result.records[0].path[k].samples;
        if !n.is_power_of_two() && n % 4000 != 0 {
            continue;
        }
        let mean = result.records.iter().map(|r| r.path[k].l2_sq).sum::<f64>() / result.records.len() as f64;
        println!("{n:>6} {mean:>12.3e} {:>12.4}", n as f64 * mean);
    }
    Ok(())
}
