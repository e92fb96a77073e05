//! Long-running benchmark at larger scale. Opt-in: nothing runs unless the
//! dimension and stream length are given explicitly.
//!
//! ```text
//! cargo run --release --example full_scale -- <p> <n> <batches> [replications] [logit]
//! cargo run --release --example full_scale -- 1000 1000 1000 1
//! ```

use std::time::Instant;

use renewglm::simulation::{run_experiment, write_metrics_tsv, ExperimentConfig};
use renewglm::{Family, PenaltyConfig, SolverConfig};

fn main() -> renewglm::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 3 {
        eprintln!("usage: full_scale <p> <n> <batches> [replications] [logit]");
        return Ok(());
    }
    let num = |i: usize| -> usize { args[i].parse().expect("integer argument") };
    let family = if args.get(4).map(String::as_str) == Some("logit") {
        Family::BinomialLogit
    } else {
        Family::GaussianIdentity
    };
    let mut results = Vec::new();
    for penalty in [PenaltyConfig::lasso(), PenaltyConfig::scad(3.7), PenaltyConfig::mcp(3.0)] {
        let mut config = ExperimentConfig::new(family, SolverConfig::new(penalty));
        config.p = num(0);
        config.n = num(1);
        config.batches = num(2);
        config.replications = args.get(3).map_or(1, |s| s.parse().expect("integer"));
        let start = Instant::now();
        results.push(run_experiment(&config)?);
        eprintln!("{}: {:.1?}", config.method_name(), start.elapsed());
    }
    write_metrics_tsv(&results, &mut std::io::stdout().lock())
}
