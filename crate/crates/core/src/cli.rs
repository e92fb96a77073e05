//! Command-line front end: `fit`, `resume`, `simulate` and `report`.
//!
//! The command functions run in-process and return [`Error`]s; the binary
//! maps those to exit codes with [`Error::exit_code`]. Outputs are written
//! only after all computation succeeds, and any output file already written
//! is removed if a later write fails.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;

use crate::error::{Error, Result};
use crate::glm::{Batch, Family};
use crate::penalty::{PenaltyConfig, PenaltyKind, DEFAULT_MCP_R, DEFAULT_SCAD_R};
use crate::persistence::{checkpoint_string, load_checkpoint, read_batch};
use crate::simulation::{
    error_series, read_records, run_experiment, write_metrics_tsv, write_records_tsv,
    write_series_tsv, ExperimentConfig,
};
use crate::solver::{SolverConfig, SolverState};
use crate::tuning::BicTrace;

#[derive(Debug, Parser)]
#[command(name = "renewglm", version, about = "Streaming penalized GLM fitting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a stream of CSV batch files, processed in argument order.
    Fit(FitArgs),
    /// Continue a stream from a checkpoint with further batch files.
    Resume(ResumeArgs),
    /// Run a simulation experiment and write metrics and records tables.
    Simulate(SimulateArgs),
    /// Average a records table into per-method error curves.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// gaussian_identity or binomial_logit.
    #[arg(long, default_value = "gaussian_identity")]
    pub family: Family,
    /// lasso, scad or mcp.
    #[arg(long, default_value = "lasso")]
    pub penalty: PenaltyKind,
    /// Shape constant; defaults to 3.7 for SCAD and 3 for MCP.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub grid_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub min_ratio: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub cd_tol: f64,
    #[arg(long, default_value_t = 1000)]
    pub cd_max_passes: usize,
    #[arg(long, default_value_t = 1)]
    pub refit_steps: usize,
    /// Leave column 1 (an intercept) unpenalized.
    #[arg(long)]
    pub no_penalize_intercept: bool,
}

impl SolverArgs {
    pub fn config(&self) -> Result<SolverConfig> {
        let mut penalty = PenaltyConfig::with_default_r(self.penalty);
        if let Some(r) = self.r {
            if self.penalty == PenaltyKind::Lasso {
                return Err(Error::invalid("--r has no effect with the lasso penalty"));
            }
            penalty.r = r;
        }
        let config = SolverConfig {
            penalty,
            lambda_grid_size: self.grid_size,
            lambda_min_ratio: self.min_ratio,
            cd_tol: self.cd_tol,
            cd_max_passes: self.cd_max_passes,
            refit_max_steps: self.refit_steps,
            penalize_intercept: !self.no_penalize_intercept,
            pinned_active: None,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output directory for coefficients.tsv, bic_trace.tsv and lambda_history.tsv.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write a checkpoint of the final state here.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Batch files, in stream order.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ResumeArgs {
    /// Checkpoint to resume from; it also fixes the solver configuration.
    #[arg(long)]
    pub from: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Write the updated checkpoint here (may equal --from).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "gaussian_identity")]
    pub family: Family,
    /// One or more of lasso, scad, mcp (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "lasso,scad,mcp")]
    pub penalty: Vec<PenaltyKind>,
    #[arg(long, default_value_t = DEFAULT_SCAD_R)]
    pub scad_r: f64,
    #[arg(long, default_value_t = DEFAULT_MCP_R)]
    pub mcp_r: f64,
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    /// Per-batch sample size.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub batches: usize,
    #[arg(long, default_value_t = 0.5)]
    pub rho: f64,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    #[arg(long, default_value_t = 2023)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub noise_sd: f64,
    /// Observations pooled into the first batch for the offline start.
    #[arg(long, default_value_t = 1000)]
    pub warm_start: usize,
    /// Also fit the pooled data offline (Total_data rows).
    #[arg(long)]
    pub offline: bool,
    #[arg(long, default_value_t = 100)]
    pub grid_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub min_ratio: f64,
    #[arg(long)]
    pub no_penalize_intercept: bool,
    /// Output directory for metrics.tsv and records.tsv.
    #[arg(long)]
    pub out: PathBuf,
}

impl SimulateArgs {
    pub fn configs(&self) -> Result<Vec<ExperimentConfig>> {
        if self.penalty.is_empty() {
            return Err(Error::invalid("--penalty needs at least one value"));
        }
        self.penalty
            .iter()
            .map(|&kind| {
                let penalty = match kind {
                    PenaltyKind::Lasso => PenaltyConfig::lasso(),
                    PenaltyKind::Scad => PenaltyConfig::scad(self.scad_r),
                    PenaltyKind::Mcp => PenaltyConfig::mcp(self.mcp_r),
                };
                let solver = SolverConfig {
                    penalty,
                    lambda_grid_size: self.grid_size,
                    lambda_min_ratio: self.min_ratio,
                    penalize_intercept: !self.no_penalize_intercept,
                    ..SolverConfig::default()
                };
                let config = ExperimentConfig {
                    family: self.family,
                    p: self.p,
                    n: self.n,
                    batches: self.batches,
                    rho: self.rho,
                    replications: self.reps,
                    seed: self.seed,
                    noise_sd: self.noise_sd,
                    warm_start_size: self.warm_start,
                    offline_reference: self.offline,
                    solver,
                };
                config.validate()?;
                Ok(config)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Records table written by `simulate`.
    pub records: PathBuf,
    /// Output file for the series table (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(args) => cmd_fit(&args),
        Command::Resume(args) => cmd_resume(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Report(args) => cmd_report(&args),
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::File {
        path: path.display().to_string(),
        source,
    })
}

fn load_batch(path: &Path, index: usize) -> Result<Batch> {
    let (_, batch) = read_batch(BufReader::new(open(path)?), index).map_err(|e| match e {
        Error::Parse { location, message } => Error::Parse {
            location: format!("{}: {location}", path.display()),
            message,
        },
        other => other,
    })?;
    Ok(batch)
}

/// Files to be written together; either all land or none remain.
struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    fn new() -> Self {
        Outputs { files: Vec::new() }
    }

    fn add(&mut self, path: PathBuf, contents: Vec<u8>) {
        self.files.push((path, contents));
    }

    fn commit(self) -> Result<()> {
        let mut written: Vec<PathBuf> = Vec::new();
        for (path, contents) in &self.files {
            if let Err(e) = write_atomic(path, contents) {
                for done in &written {
                    let _ = fs::remove_file(done);
                }
                return Err(e);
            }
            written.push(path.clone());
        }
        Ok(())
    }
}

/// Writes through a sibling temporary file and renames it into place.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let file_err = |source| Error::File {
        path: path.display().to_string(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::File {
            path: dir.display().to_string(),
            source,
        })?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = File::create(&tmp).and_then(|f| {
        let mut w = BufWriter::new(f);
        w.write_all(contents)?;
        w.flush()
    });
    if let Err(e) = result.and_then(|_| fs::rename(&tmp, path)) {
        let _ = fs::remove_file(&tmp);
        return Err(file_err(e));
    }
    Ok(())
}

pub fn coefficients_tsv(state: &SolverState) -> String {
    let mut s = String::from("index\tvalue\tactive\n");
    for (j, v) in state.beta().iter().enumerate() {
        let active = u8::from(state.active().binary_search(&j).is_ok());
        s.push_str(&format!("{}\t{v}\t{active}\n", j + 1));
    }
    s
}

pub fn lambda_history_tsv(state: &SolverState) -> String {
    let mut s = String::from("batch\tlambda\n");
    for (b, l) in state.lambda_history().iter().enumerate() {
        s.push_str(&format!("{}\t{l}\n", b + 1));
    }
    s
}

/// One row per (batch, grid λ); `chosen` marks the selected λ.
pub fn bic_trace_tsv(traces: &[(usize, BicTrace)]) -> String {
    let mut s = String::from("batch\tlambda\tbic\ts_hat\tchosen\n");
    for (batch, t) in traces {
        for (i, ((l, b), k)) in t
            .lambdas
            .iter()
            .zip(&t.bic_values)
            .zip(&t.s_hat_per_lambda)
            .enumerate()
        {
            let chosen = u8::from(i == t.chosen_index);
            s.push_str(&format!("{batch}\t{l}\t{b}\t{k}\t{chosen}\n"));
        }
    }
    s
}

fn stream_outputs(
    state: &SolverState,
    config: &SolverConfig,
    traces: &[(usize, BicTrace)],
    out: &Path,
    checkpoint: Option<&PathBuf>,
) -> Result<()> {
    let mut outputs = Outputs::new();
    outputs.add(out.join("coefficients.tsv"), coefficients_tsv(state).into_bytes());
    outputs.add(out.join("bic_trace.tsv"), bic_trace_tsv(traces).into_bytes());
    outputs.add(out.join("lambda_history.tsv"), lambda_history_tsv(state).into_bytes());
    if let Some(path) = checkpoint {
        outputs.add(path.clone(), checkpoint_string(state, config).into_bytes());
    }
    outputs.commit()
}

fn feed(
    state: &mut SolverState,
    config: &SolverConfig,
    files: &[PathBuf],
    traces: &mut Vec<(usize, BicTrace)>,
) -> Result<()> {
    for path in files {
        let index = state.batches() + 1;
        let batch = load_batch(path, index)?;
        let trace = state.process_batch(&batch, config)?;
        info!("batch {index} ({}): active {:?}", path.display(), state.active());
        traces.push((index, trace));
    }
    Ok(())
}

/// Runs a whole stream from its first batch file.
pub fn fit_files(files: &[PathBuf], config: &SolverConfig, family: Family) -> Result<(SolverState, Vec<(usize, BicTrace)>)> {
    let (first, rest) = files
        .split_first()
        .ok_or_else(|| Error::invalid("fit needs at least one batch file"))?;
    let batch = load_batch(first, 1)?;
    let (mut state, trace) = SolverState::init_first_batch(&batch, config, family)?;
    let mut traces = vec![(1, trace)];
    feed(&mut state, config, rest, &mut traces)?;
    Ok((state, traces))
}

pub fn cmd_fit(args: &FitArgs) -> Result<()> {
    let config = args.solver.config()?;
    let (state, traces) = fit_files(&args.files, &config, args.solver.family)?;
    stream_outputs(&state, &config, &traces, &args.out, args.checkpoint.as_ref())
}

pub fn cmd_resume(args: &ResumeArgs) -> Result<()> {
    let (mut state, config) = load_checkpoint(BufReader::new(open(&args.from)?)).map_err(|e| match e {
        Error::Corrupt(msg) => Error::Corrupt(format!("{}: {msg}", args.from.display())),
        other => other,
    })?;
    let mut traces = Vec::new();
    feed(&mut state, &config, &args.files, &mut traces)?;
    stream_outputs(&state, &config, &traces, &args.out, args.checkpoint.as_ref())
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let configs = args.configs()?;
    let mut results = Vec::with_capacity(configs.len());
    for config in &configs {
        let result = run_experiment(config)?;
        info!(
            "{} {}: {} replications, {} failed",
            config.size_label(),
            config.method_name(),
            result.records.len(),
            result.failures.len()
        );
        results.push(result);
    }
    let mut metrics = Vec::new();
    write_metrics_tsv(&results, &mut metrics)?;
    let mut records = Vec::new();
    write_records_tsv(&results, &mut records)?;
    let mut outputs = Outputs::new();
    outputs.add(args.out.join("metrics.tsv"), metrics);
    outputs.add(args.out.join("records.tsv"), records);
    outputs.commit()
}

pub fn cmd_report(args: &ReportArgs) -> Result<()> {
    let rows = read_records(BufReader::new(open(&args.records)?)).map_err(|e| match e {
        Error::Parse { location, message } => Error::Parse {
            location: format!("{}: {location}", args.records.display()),
            message,
        },
        other => other,
    })?;
    let series = error_series(&rows);
    let mut table = Vec::new();
    write_series_tsv(&series, &mut table)?;
    match &args.out {
        Some(path) => {
            let mut outputs = Outputs::new();
            outputs.add(path.clone(), table);
            outputs.commit()
        }
        None => {
            std::io::stdout().write_all(&table)?;
            Ok(())
        }
    }
}
