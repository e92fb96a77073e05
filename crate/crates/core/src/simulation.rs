//! Synthetic streams and selection metrics for Gaussian-linear and logistic
//! designs.
//!
//! Covariates carry an intercept column of ones; the remaining `p − 1`
//! columns are equicorrelated standard normals. The true coefficient vector
//! is supported on the first five coordinates with alternating signs.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use log::warn;
use ndarray::{Array1, Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::glm::{Batch, Family};
use crate::solver::{SolverConfig, SolverState};

/// Size of the true support.
pub const TRUE_SUPPORT: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub family: Family,
    pub p: usize,
    /// Per-batch sample size.
    pub n: usize,
    /// Number of generated batches `B`; the stream holds `n·B` observations.
    pub batches: usize,
    /// Pairwise correlation among the non-intercept covariates.
    pub rho: f64,
    pub replications: usize,
    pub seed: u64,
    /// Gaussian noise standard deviation (ignored for logistic designs).
    pub noise_sd: f64,
    /// Observations used for the offline start: the first `⌈warm/n⌉`
    /// generated batches are pooled into batch 1. Zero keeps batch 1 as is.
    pub warm_start_size: usize,
    /// Also fit the pooled data offline as a reference.
    pub offline_reference: bool,
    pub solver: SolverConfig,
}

impl ExperimentConfig {
    pub fn new(family: Family, solver: SolverConfig) -> Self {
        ExperimentConfig {
            family,
            p: 10,
            n: 100,
            batches: 50,
            rho: 0.5,
            replications: 20,
            seed: 2023,
            noise_sd: 1.0,
            warm_start_size: 1000,
            offline_reference: false,
            solver,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.p < 6 {
            return Err(Error::invalid(format!("p must be at least 6, got {}", self.p)));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::invalid(format!("rho must lie in [0, 1), got {}", self.rho)));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications must be at least 1"));
        }
        if self.n == 0 || self.batches == 0 {
            return Err(Error::invalid("n and batches must be positive"));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::invalid("noise_sd must be finite and nonnegative"));
        }
        Ok(())
    }

    /// How many generated batches are pooled into the first solver batch.
    pub fn warm_batches(&self) -> usize {
        if self.warm_start_size <= self.n {
            1
        } else {
            self.warm_start_size.div_ceil(self.n).min(self.batches)
        }
    }

    pub fn total_samples(&self) -> usize {
        self.n * self.batches
    }

    pub fn method_name(&self) -> String {
        format!("Renew_{}", self.solver.penalty.kind.label())
    }

    pub fn offline_method_name(&self) -> String {
        format!("Total_data_{}", self.solver.penalty.kind.label())
    }

    pub fn size_label(&self) -> String {
        format!("n={},B={}", self.n, self.batches)
    }
}

/// `(0.5, −0.5, 0.5, −0.5, 0.5, 0, …)` for Gaussian designs and
/// `(1, −1, 1, −1, 1, 0, …)` for logistic ones.
pub fn true_beta(p: usize, family: Family) -> Result<Array1<f64>> {
    if p < 6 {
        return Err(Error::invalid(format!("true_beta needs p >= 6, got {p}")));
    }
    let magnitude = match family {
        Family::GaussianIdentity => 0.5,
        Family::BinomialLogit => 1.0,
    };
    Ok(Array1::from_shape_fn(p, |j| match j {
        j if j < TRUE_SUPPORT && j % 2 == 0 => magnitude,
        j if j < TRUE_SUPPORT => -magnitude,
        _ => 0.0,
    }))
}

pub fn true_support() -> Vec<usize> {
    (0..TRUE_SUPPORT).collect()
}

/// Intercept column followed by `p − 1` equicorrelated standard normals,
/// drawn as `√ρ·shared + √(1−ρ)·own`.
pub fn gen_covariates<R: Rng + ?Sized>(n: usize, p: usize, rho: f64, rng: &mut R) -> Array2<f64> {
    let shared_w = rho.sqrt();
    let own_w = (1.0 - rho).sqrt();
    let mut x = Array2::zeros((n, p));
    for mut row in x.rows_mut() {
        row[0] = 1.0;
        let shared: f64 = rng.sample(StandardNormal);
        for v in row.iter_mut().skip(1) {
            let own: f64 = rng.sample(StandardNormal);
            *v = shared_w * shared + own_w * own;
        }
    }
    x
}

pub fn gen_response<R: Rng + ?Sized>(
    family: Family,
    x: &Array2<f64>,
    beta0: ArrayView1<'_, f64>,
    noise_sd: f64,
    rng: &mut R,
) -> Array1<f64> {
    let theta = x.dot(&beta0);
    match family {
        Family::GaussianIdentity => theta.mapv(|t| {
            let e: f64 = rng.sample(StandardNormal);
            t + noise_sd * e
        }),
        Family::BinomialLogit => theta.mapv(|t| {
            let prob = family.mean(t);
            let draw = Bernoulli::new(prob).expect("logistic mean lies in [0, 1]");
            if draw.sample(rng) {
                1.0
            } else {
                0.0
            }
        }),
    }
}

/// Selection outcome of one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionRecord {
    pub nv: usize,
    pub included: bool,
    pub correct: bool,
    pub type_i: f64,
    pub type_ii: f64,
}

/// NV, IN, CS and the type-I/II rates, both normalized by `p`.
pub fn eval_selection(selected: &[usize], truth: &[usize], p: usize) -> SelectionRecord {
    let false_pos = selected.iter().filter(|j| !truth.contains(j)).count();
    let false_neg = truth.iter().filter(|j| !selected.contains(j)).count();
    SelectionRecord {
        nv: selected.len(),
        included: false_neg == 0,
        correct: false_neg == 0 && false_pos == 0,
        type_i: false_pos as f64 / p as f64,
        type_ii: false_neg as f64 / p as f64,
    }
}

/// Squared Euclidean distance.
pub fn l2_error(beta_hat: ArrayView1<'_, f64>, beta0: ArrayView1<'_, f64>) -> Result<f64> {
    if beta_hat.len() != beta0.len() {
        return Err(Error::DimensionMismatch {
            context: "l2 error",
            expected: beta0.len(),
            found: beta_hat.len(),
        });
    }
    Ok(beta_hat
        .iter()
        .zip(beta0.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// `1 − SSE/SST`.
pub fn r_squared(y: ArrayView1<'_, f64>, y_hat: ArrayView1<'_, f64>) -> Result<f64> {
    if y.len() != y_hat.len() {
        return Err(Error::DimensionMismatch {
            context: "R² predictions",
            expected: y.len(),
            found: y_hat.len(),
        });
    }
    if y.len() < 2 {
        return Err(Error::invalid("R² needs at least two observations"));
    }
    let mean = y.mean().expect("nonempty");
    let sst: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if sst == 0.0 {
        return Err(Error::UndefinedRSquared);
    }
    let sse: f64 = y
        .iter()
        .zip(y_hat.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(1.0 - sse / sst)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn mean_of(values: impl Iterator<Item = f64>) -> f64 {
    let mut acc = CompensatedSum::default();
    let mut count = 0usize;
    for v in values {
        acc.add(v);
        count += 1;
    }
    if count == 0 {
        f64::NAN
    } else {
        acc.value() / count as f64
    }
}

/// Replication averages of the selection criteria and the squared ℓ₂ error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionMetrics {
    pub nv: f64,
    /// IN: fraction of replications whose selection contains the true support.
    pub inclusion: f64,
    /// CS: fraction selecting exactly the true support.
    pub correct: f64,
    pub type_i: f64,
    pub type_ii: f64,
    pub l2_sq: f64,
    pub replications: usize,
}

impl SelectionMetrics {
    pub fn aggregate(outcomes: &[(SelectionRecord, f64)]) -> Self {
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        SelectionMetrics {
            nv: mean_of(outcomes.iter().map(|(s, _)| s.nv as f64)),
            inclusion: mean_of(outcomes.iter().map(|(s, _)| flag(s.included))),
            correct: mean_of(outcomes.iter().map(|(s, _)| flag(s.correct))),
            type_i: mean_of(outcomes.iter().map(|(s, _)| s.type_i)),
            type_ii: mean_of(outcomes.iter().map(|(s, _)| s.type_ii)),
            l2_sq: mean_of(outcomes.iter().map(|(_, l)| *l)),
            replications: outcomes.len(),
        }
    }
}

/// Squared ℓ₂ error after one solver batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathPoint {
    pub batch: usize,
    pub samples: usize,
    pub l2_sq: f64,
    pub nv: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub selection: SelectionRecord,
    pub l2_sq: f64,
    pub beta: Array1<f64>,
    pub path: Vec<PathPoint>,
    pub offline: Option<(SelectionRecord, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationFailure {
    pub replication: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub online: SelectionMetrics,
    pub offline: Option<SelectionMetrics>,
    pub records: Vec<ReplicationRecord>,
    pub failures: Vec<ReplicationFailure>,
}

/// Generator for replication `rep`: seeded with `seed ⊕ rep`.
pub fn replication_rng(seed: u64, rep: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ rep as u64)
}

/// Draws one generated batch of the design.
pub fn gen_batch<R: Rng + ?Sized>(
    config: &ExperimentConfig,
    beta0: ArrayView1<'_, f64>,
    n: usize,
    index: usize,
    rng: &mut R,
) -> Result<Batch> {
    let x = gen_covariates(n, config.p, config.rho, rng);
    let y = gen_response(config.family, &x, beta0, config.noise_sd, rng);
    Batch::new(y, x, index)
}

/// Runs one replication of the stream and, if configured, the pooled
/// offline reference on the same data.
pub fn run_replication(config: &ExperimentConfig, rep: usize) -> Result<ReplicationRecord> {
    let mut rng = replication_rng(config.seed, rep);
    let beta0 = true_beta(config.p, config.family)?;
    let truth = true_support();
    let warm = config.warm_batches();
    let mut retained: Vec<Batch> = Vec::new();

    let mut first = Vec::with_capacity(warm);
    for _ in 0..warm {
        first.push(gen_batch(config, beta0.view(), config.n, 1, &mut rng)?);
    }
    let first = Batch::concat(&first, 1)?;
    let (mut state, _) = SolverState::init_first_batch(&first, &config.solver, config.family)?;
    if config.offline_reference {
        retained.push(first);
    }
    let mut path = Vec::with_capacity(config.batches - warm + 1);
    let mut record_point = |state: &SolverState| -> Result<()> {
        path.push(PathPoint {
            batch: state.batches(),
            samples: state.samples(),
            l2_sq: l2_error(state.beta(), beta0.view())?,
            nv: state.active().len(),
        });
        Ok(())
    };
    record_point(&state)?;

    for index in 2..=(config.batches - warm + 1) {
        let batch = gen_batch(config, beta0.view(), config.n, index, &mut rng)?;
        state.process_batch(&batch, &config.solver)?;
        record_point(&state)?;
        if config.offline_reference {
            retained.push(batch);
        }
    }

    let offline = if config.offline_reference {
        let pooled = Batch::concat(&retained, 1)?;
        drop(retained);
        let (reference, _) = SolverState::init_first_batch(&pooled, &config.solver, config.family)?;
        Some((
            eval_selection(reference.active(), &truth, config.p),
            l2_error(reference.beta(), beta0.view())?,
        ))
    } else {
        None
    };

    Ok(ReplicationRecord {
        replication: rep,
        selection: eval_selection(state.active(), &truth, config.p),
        l2_sq: l2_error(state.beta(), beta0.view())?,
        beta: state.beta().to_owned(),
        path,
        offline,
    })
}

/// Runs every replication (in parallel) and aggregates the metrics.
///
/// Failed replications are reported in [`ExperimentResult::failures`] and
/// excluded from the averages.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let outcomes: Vec<Result<ReplicationRecord>> = (0..config.replications)
        .into_par_iter()
        .map(|rep| run_replication(config, rep))
        .collect();

    let mut records = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (rep, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(r) => records.push(r),
            Err(e) => {
                warn!("replication {rep} failed: {e}");
                failures.push(ReplicationFailure {
                    replication: rep,
                    message: e.to_string(),
                });
            }
        }
    }
    if records.is_empty() {
        return Err(Error::invalid(format!(
            "all {} replications failed; first error: {}",
            failures.len(),
            failures[0].message
        )));
    }
    let online = SelectionMetrics::aggregate(
        &records
            .iter()
            .map(|r| (r.selection, r.l2_sq))
            .collect::<Vec<_>>(),
    );
    let offline = if config.offline_reference {
        let outcomes: Vec<_> = records.iter().filter_map(|r| r.offline).collect();
        Some(SelectionMetrics::aggregate(&outcomes))
    } else {
        None
    };
    Ok(ExperimentResult {
        config: config.clone(),
        online,
        offline,
        records,
        failures,
    })
}

pub const METRICS_HEADER: [&str; 7] = ["Size", "Method", "NV", "IN", "CS", "I", "II"];

fn metrics_row<W: Write>(out: &mut W, size: &str, method: &str, m: &SelectionMetrics) -> std::io::Result<()> {
    writeln!(
        out,
        "{size}\t{method}\t{:.2}\t{:.2}\t{:.2}\t{:.3}\t{:.3}",
        m.nv, m.inclusion, m.correct, m.type_i, m.type_ii
    )
}

/// Writes the selection table, one row per method and design.
pub fn write_metrics_tsv<W: Write>(results: &[ExperimentResult], out: &mut W) -> Result<()> {
    writeln!(out, "{}", METRICS_HEADER.join("\t"))?;
    for r in results {
        metrics_row(out, &r.config.size_label(), &r.config.method_name(), &r.online)?;
        if let Some(off) = &r.offline {
            let size = format!("N={}", r.config.total_samples());
            metrics_row(out, &size, &r.config.offline_method_name(), off)?;
        }
    }
    Ok(())
}

pub const RECORDS_HEADER: [&str; 6] = ["method", "replication", "batch", "N", "l2_sq", "nv"];

/// Writes one row per replication and solver batch (the squared ℓ₂ error
/// path), plus one row per replication for the offline reference.
pub fn write_records_tsv<W: Write>(results: &[ExperimentResult], out: &mut W) -> Result<()> {
    writeln!(out, "{}", RECORDS_HEADER.join("\t"))?;
    for r in results {
        let method = r.config.method_name();
        for rec in &r.records {
            for pt in &rec.path {
                writeln!(
                    out,
                    "{method}\t{}\t{}\t{}\t{}\t{}",
                    rec.replication, pt.batch, pt.samples, pt.l2_sq, pt.nv
                )?;
            }
            if let Some((sel, l2)) = rec.offline {
                writeln!(
                    out,
                    "{}\t{}\t1\t{}\t{}\t{}",
                    r.config.offline_method_name(),
                    rec.replication,
                    r.config.total_samples(),
                    l2,
                    sel.nv
                )?;
            }
        }
    }
    Ok(())
}

/// One parsed row of a records file.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordRow {
    pub method: String,
    pub replication: usize,
    pub batch: usize,
    pub samples: usize,
    pub l2_sq: f64,
    pub nv: usize,
}

pub fn read_records<R: BufRead>(source: R) -> Result<Vec<RecordRow>> {
    let mut lines = source.lines();
    let header = lines
        .next()
        .transpose()?
        .ok_or_else(|| Error::parse("line 1", "records file is empty"))?;
    let cols: Vec<&str> = header.split('\t').collect();
    if cols != RECORDS_HEADER {
        return Err(Error::parse("line 1", format!("unexpected records header `{header}`")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != RECORDS_HEADER.len() {
            return Err(Error::parse(
                format!("line {lineno}"),
                format!("expected {} fields, found {}", RECORDS_HEADER.len(), f.len()),
            ));
        }
        let bad = |what: &str| Error::parse(format!("line {lineno}"), format!("invalid {what}"));
        let l2_sq: f64 = f[4].parse().map_err(|_| bad("l2_sq"))?;
        if !l2_sq.is_finite() || l2_sq < 0.0 {
            return Err(bad("l2_sq"));
        }
        rows.push(RecordRow {
            method: f[0].to_string(),
            replication: f[1].parse().map_err(|_| bad("replication"))?,
            batch: f[2].parse().map_err(|_| bad("batch"))?,
            samples: f[3].parse().map_err(|_| bad("N"))?,
            l2_sq,
            nv: f[5].parse().map_err(|_| bad("nv"))?,
        });
    }
    if rows.is_empty() {
        return Err(Error::parse("records", "no data rows"));
    }
    Ok(rows)
}

/// Mean squared ℓ₂ error against sample size for one method.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub method: String,
    /// `(N, mean l2_sq, replications)`, ascending in `N`.
    pub points: Vec<(usize, f64, usize)>,
}

/// Averages record rows over replications, per method and sample size.
pub fn error_series(rows: &[RecordRow]) -> Vec<ErrorSeries> {
    let mut grouped: BTreeMap<&str, BTreeMap<usize, Vec<f64>>> = BTreeMap::new();
    for row in rows {
        grouped
            .entry(row.method.as_str())
            .or_default()
            .entry(row.samples)
            .or_default()
            .push(row.l2_sq);
    }
    grouped
        .into_iter()
        .map(|(method, by_n)| ErrorSeries {
            method: method.to_string(),
            points: by_n
                .into_iter()
                .map(|(n, v)| (n, mean_of(v.iter().copied()), v.len()))
                .collect(),
        })
        .collect()
}

pub fn write_series_tsv<W: Write>(series: &[ErrorSeries], out: &mut W) -> Result<()> {
    writeln!(out, "method\tN\tmean_l2_sq\treplications")?;
    for s in series {
        for (n, mean, count) in &s.points {
            writeln!(out, "{}\t{n}\t{mean}\t{count}", s.method)?;
        }
    }
    Ok(())
}
