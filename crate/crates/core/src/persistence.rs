//! Batch files and solver checkpoints.
//!
//! Batch files are CSV with a header row; the first column is the response
//! and the remaining columns are covariates.
//!
//! A checkpoint is a line-oriented UTF-8 text file. Every line is a key,
//! one space, and a value; vectors are space-separated, empty vectors are
//! written as `-`, and floats use Rust's shortest round-trip formatting so a
//! load reproduces every bit. The final line is `sha256 <hex>`, the digest of
//! every preceding byte. See the crate README for the full layout.

use std::io::{Read, Write};

use ndarray::{Array1, Array2};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::glm::{Batch, Family};
use crate::penalty::{PenaltyConfig, PenaltyKind};
use crate::solver::{SolverConfig, SolverState};

pub const CHECKPOINT_MAGIC: &str = "renewglm-checkpoint";
pub const FORMAT_VERSION: u32 = 1;

/// Reads a CSV batch. Returns the header names and the batch, tagged with
/// `index`. Errors name the offending data row (1-based, header excluded).
pub fn read_batch<R: Read>(source: R, index: usize) -> Result<(Vec<String>, Batch)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(Error::parse("header", "file is empty")),
        Some(r) => r.map_err(|e| csv_error("header", e))?,
    };
    let header: Vec<String> = header.iter().map(str::to_string).collect();
    if header.len() < 2 {
        return Err(Error::parse(
            "header",
            format!("need a response and at least one covariate, found {} column(s)", header.len()),
        ));
    }
    let width = header.len();
    let mut y = Vec::new();
    let mut x = Vec::new();
    for (i, record) in records.enumerate() {
        let row = i + 1;
        let location = || format!("row {row} (line {})", row + 1);
        let record = record.map_err(|e| csv_error(&location(), e))?;
        if record.len() != width {
            return Err(Error::parse(
                location(),
                format!("expected {width} fields, found {}", record.len()),
            ));
        }
        for (k, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::parse(location(), format!("column `{}`: `{field}` is not a number", header[k]))
            })?;
            if !v.is_finite() {
                return Err(Error::parse(
                    location(),
                    format!("column `{}`: non-finite value `{field}`", header[k]),
                ));
            }
            if k == 0 {
                y.push(v);
            } else {
                x.push(v);
            }
        }
    }
    if y.is_empty() {
        return Err(Error::parse("row 1", "file has a header but no data rows"));
    }
    let n = y.len();
    let x = Array2::from_shape_vec((n, width - 1), x).expect("row widths checked");
    Ok((header, Batch::new(Array1::from(y), x, index)?))
}

fn csv_error(location: &str, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::parse(location, format!("{other:?}")),
    }
}

/// Writes a batch as CSV. Without a header the columns are named
/// `y, x1, …, xp`.
pub fn write_batch<W: Write>(batch: &Batch, header: Option<&[String]>, sink: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(sink);
    let default: Vec<String>;
    let header = match header {
        Some(h) => {
            if h.len() != batch.p() + 1 {
                return Err(Error::DimensionMismatch {
                    context: "batch header",
                    expected: batch.p() + 1,
                    found: h.len(),
                });
            }
            h
        }
        None => {
            default = std::iter::once("y".to_string())
                .chain((1..=batch.p()).map(|j| format!("x{j}")))
                .collect();
            &default
        }
    };
    writer.write_record(header).map_err(csv_write_error)?;
    let mut fields = Vec::with_capacity(batch.p() + 1);
    for (yi, row) in batch.y().iter().zip(batch.x().rows()) {
        fields.clear();
        fields.push(yi.to_string());
        fields.extend(row.iter().map(f64::to_string));
        writer.write_record(&fields).map_err(csv_write_error)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_write_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::invalid(format!("CSV write failed: {other:?}")),
    }
}

fn join_floats<'a>(values: impl IntoIterator<Item = &'a f64>) -> String {
    let s: Vec<String> = values.into_iter().map(f64::to_string).collect();
    if s.is_empty() {
        "-".to_string()
    } else {
        s.join(" ")
    }
}

fn join_indices(values: &[usize]) -> String {
    if values.is_empty() {
        "-".to_string()
    } else {
        values.iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
    }
}

/// Serializes the state and the solver configuration that produced it.
pub fn checkpoint_string(state: &SolverState, config: &SolverConfig) -> String {
    let mut out = String::new();
    let mut line = |key: &str, value: String| {
        out.push_str(key);
        out.push(' ');
        out.push_str(&value);
        out.push('\n');
    };
    line(CHECKPOINT_MAGIC, format!("format_version {FORMAT_VERSION}"));
    line("family", state.family().to_string());
    line("p", state.p().to_string());
    line("batches", state.batches().to_string());
    line("samples", state.samples().to_string());
    line("penalty", format!("{} {}", config.penalty.kind.name(), config.penalty.r));
    line("lambda_grid_size", config.lambda_grid_size.to_string());
    line("lambda_min_ratio", config.lambda_min_ratio.to_string());
    line("cd_tol", config.cd_tol.to_string());
    line("cd_max_passes", config.cd_max_passes.to_string());
    line("refit_max_steps", config.refit_max_steps.to_string());
    line("penalize_intercept", config.penalize_intercept.to_string());
    line(
        "pinned_active",
        match &config.pinned_active {
            None => "none".to_string(),
            Some(idx) => join_indices(idx),
        },
    );
    line("beta", join_floats(state.beta()));
    line("cum_w", join_floats(state.cum_w()));
    line("tracked", join_indices(state.tracked()));
    let h = state.cum_h();
    let lower: Vec<f64> = (0..h.nrows())
        .flat_map(|i| (0..=i).map(move |k| (i, k)))
        .map(|(i, k)| h[[i, k]])
        .collect();
    line("cum_h", join_floats(&lower));
    line("active", join_indices(state.active()));
    line("lambda_history", join_floats(state.lambda_history()));
    let digest = hex::encode(Sha256::digest(out.as_bytes()));
    out.push_str("sha256 ");
    out.push_str(&digest);
    out.push('\n');
    out
}

/// Writes a checkpoint. The caller must not mutate the state concurrently.
pub fn save_checkpoint<W: Write>(state: &SolverState, config: &SolverConfig, mut sink: W) -> Result<()> {
    sink.write_all(checkpoint_string(state, config).as_bytes())?;
    sink.flush()?;
    Ok(())
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::Corrupt(msg.into())
}

/// Sequential reader over `key value` lines.
struct Fields<'a> {
    lines: std::str::Lines<'a>,
}

impl<'a> Fields<'a> {
    fn take(&mut self, key: &str) -> Result<&'a str> {
        let line = self
            .lines
            .next()
            .ok_or_else(|| corrupt(format!("missing field `{key}`")))?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok(v),
            _ => Err(corrupt(format!("expected field `{key}`, found `{line}`"))),
        }
    }

    fn scalar<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let v = self.take(key)?;
        v.parse()
            .map_err(|_| corrupt(format!("field `{key}`: cannot parse `{v}`")))
    }

    fn list<T: std::str::FromStr>(&mut self, key: &str) -> Result<Vec<T>> {
        let v = self.take(key)?;
        if v == "-" {
            return Ok(Vec::new());
        }
        v.split(' ')
            .map(|s| {
                s.parse()
                    .map_err(|_| corrupt(format!("field `{key}`: cannot parse `{s}`")))
            })
            .collect()
    }
}

/// Parses a checkpoint, verifying version and checksum before anything else.
pub fn parse_checkpoint(text: &str) -> Result<(SolverState, SolverConfig)> {
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| corrupt("file is empty"))?;
    let version = first
        .strip_prefix(CHECKPOINT_MAGIC)
        .and_then(|rest| rest.strip_prefix(" format_version "))
        .ok_or_else(|| corrupt("missing checkpoint header"))?;
    let version: u32 = version
        .parse()
        .map_err(|_| corrupt(format!("unreadable format version `{version}`")))?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }

    let body_end = text
        .strip_suffix('\n')
        .and_then(|t| t.rfind('\n'))
        .map(|i| i + 1)
        .ok_or_else(|| corrupt("truncated: no checksum line"))?;
    let (body, trailer) = text.split_at(body_end);
    let stored = trailer
        .strip_prefix("sha256 ")
        .and_then(|s| s.strip_suffix('\n'))
        .ok_or_else(|| corrupt("truncated: no checksum line"))?;
    let actual = hex::encode(Sha256::digest(body.as_bytes()));
    if stored != actual {
        return Err(corrupt(format!("checksum mismatch: stored {stored}, computed {actual}")));
    }

    let mut f = Fields {
        lines: body.lines(),
    };
    f.lines.next();
    let family: Family = f
        .take("family")?
        .parse()
        .map_err(|e: Error| corrupt(e.to_string()))?;
    let p: usize = f.scalar("p")?;
    let batches: usize = f.scalar("batches")?;
    let samples: usize = f.scalar("samples")?;
    let penalty = f.take("penalty")?;
    let (kind, r) = penalty
        .split_once(' ')
        .ok_or_else(|| corrupt(format!("field `penalty`: `{penalty}`")))?;
    let kind: PenaltyKind = kind.parse().map_err(|e: Error| corrupt(e.to_string()))?;
    let r: f64 = r
        .parse()
        .map_err(|_| corrupt(format!("field `penalty`: cannot parse `{r}`")))?;
    let mut config = SolverConfig {
        penalty: PenaltyConfig { kind, r },
        lambda_grid_size: f.scalar("lambda_grid_size")?,
        lambda_min_ratio: f.scalar("lambda_min_ratio")?,
        cd_tol: f.scalar("cd_tol")?,
        cd_max_passes: f.scalar("cd_max_passes")?,
        refit_max_steps: f.scalar("refit_max_steps")?,
        penalize_intercept: f.scalar("penalize_intercept")?,
        pinned_active: None,
    };
    config.pinned_active = match f.take("pinned_active")? {
        "none" => None,
        "-" => Some(Vec::new()),
        list => Some(
            list.split(' ')
                .map(|s| {
                    s.parse()
                        .map_err(|_| corrupt(format!("field `pinned_active`: cannot parse `{s}`")))
                })
                .collect::<Result<_>>()?,
        ),
    };
    config
        .validate()
        .map_err(|e| corrupt(format!("stored solver configuration: {e}")))?;

    let beta: Vec<f64> = f.list("beta")?;
    let cum_w: Vec<f64> = f.list("cum_w")?;
    let tracked: Vec<usize> = f.list("tracked")?;
    let lower: Vec<f64> = f.list("cum_h")?;
    let active: Vec<usize> = f.list("active")?;
    let lambda_history: Vec<f64> = f.list("lambda_history")?;
    if let Some(extra) = f.lines.next() {
        return Err(corrupt(format!("unexpected trailing line `{extra}`")));
    }
    if beta.len() != p {
        return Err(corrupt(format!("beta has {} entries, p = {p}", beta.len())));
    }
    let k = tracked.len();
    if lower.len() != k * (k + 1) / 2 {
        return Err(corrupt(format!(
            "cum_h has {} entries, expected {} for {k} tracked indices",
            lower.len(),
            k * (k + 1) / 2
        )));
    }
    let mut cum_h = Array2::zeros((k, k));
    let mut it = lower.into_iter();
    for i in 0..k {
        for l in 0..=i {
            let v = it.next().expect("length checked");
            cum_h[[i, l]] = v;
            cum_h[[l, i]] = v;
        }
    }
    let state = SolverState::from_parts(
        family,
        batches,
        samples,
        Array1::from(beta),
        Array1::from(cum_w),
        tracked,
        cum_h,
        active,
        lambda_history,
    )
    .map_err(|e| corrupt(format!("inconsistent state: {e}")))?;
    Ok((state, config))
}

/// Reads a checkpoint written by [`save_checkpoint`].
pub fn load_checkpoint<R: Read>(mut source: R) -> Result<(SolverState, SolverConfig)> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let text = String::from_utf8(bytes).map_err(|_| corrupt("not valid UTF-8"))?;
    parse_checkpoint(&text)
}
