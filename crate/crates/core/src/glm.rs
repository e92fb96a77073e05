//! Exponential-family primitives for canonical-link GLMs.
//!
//! Every quantity here is the simplified per-batch log-likelihood
//! `ℓ(β) = yᵀXβ − 1ᵀb(Xβ)` with the dispersion fixed to one, together with its
//! score `Xᵀ(y − b′(Xβ))` and negative Hessian `Xᵀ diag(b″(Xβ)) X`.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Bound applied to the logit linear predictor before exponentiation.
pub const LOGIT_CLAMP: f64 = 30.0;

/// Exponential-family member with its canonical link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// `b(θ) = θ²/2`, identity link.
    GaussianIdentity,
    /// `b(θ) = log(1 + eᶿ)`, logit link.
    BinomialLogit,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::GaussianIdentity => "gaussian_identity",
            Family::BinomialLogit => "binomial_logit",
        }
    }

    #[inline]
    fn clamp(&self, theta: f64) -> f64 {
        match self {
            Family::GaussianIdentity => theta,
            Family::BinomialLogit => theta.clamp(-LOGIT_CLAMP, LOGIT_CLAMP),
        }
    }

    /// Cumulant `b(θ)`.
    #[inline]
    pub fn cumulant(&self, theta: f64) -> f64 {
        match self {
            Family::GaussianIdentity => 0.5 * theta * theta,
            Family::BinomialLogit => {
                let t = self.clamp(theta);
                // log(1 + e^t) without cancellation for either sign
                t.max(0.0) + (-t.abs()).exp().ln_1p()
            }
        }
    }

    /// Mean function `b′(θ)`.
    #[inline]
    pub fn mean(&self, theta: f64) -> f64 {
        match self {
            Family::GaussianIdentity => theta,
            Family::BinomialLogit => {
                let t = self.clamp(theta);
                if t >= 0.0 {
                    1.0 / (1.0 + (-t).exp())
                } else {
                    let e = t.exp();
                    e / (1.0 + e)
                }
            }
        }
    }

    /// Variance function `b″(θ)`.
    #[inline]
    pub fn variance(&self, theta: f64) -> f64 {
        match self {
            Family::GaussianIdentity => 1.0,
            Family::BinomialLogit => {
                let mu = self.mean(theta);
                mu * (1.0 - mu)
            }
        }
    }

    fn check_beta(&self, batch: &Batch, beta: ArrayView1<'_, f64>) -> Result<()> {
        if beta.len() != batch.p() {
            return Err(Error::DimensionMismatch {
                context: "coefficient vector",
                expected: batch.p(),
                found: beta.len(),
            });
        }
        Ok(())
    }

    fn linear_predictor(&self, batch: &Batch, beta: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        self.check_beta(batch, beta)?;
        let theta = batch.x.dot(&beta);
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::NumericOverflow("linear predictor"));
        }
        Ok(theta)
    }

    /// Checks that the responses lie in the family's support: any finite
    /// value for the Gaussian family, `[0, 1]` for the logistic one.
    pub fn check_response(&self, batch: &Batch) -> Result<()> {
        if *self == Family::BinomialLogit {
            if let Some(i) = batch.y.iter().position(|&y| !(0.0..=1.0).contains(&y)) {
                return Err(Error::invalid(format!(
                    "batch {}: logistic response at row {} is {}, outside [0, 1]",
                    batch.index,
                    i + 1,
                    batch.y[i]
                )));
            }
        }
        Ok(())
    }

    /// `Σᵢ [yᵢθᵢ − b(θᵢ)]` with `θ = Xβ`.
    pub fn log_likelihood(&self, batch: &Batch, beta: ArrayView1<'_, f64>) -> Result<f64> {
        let theta = self.linear_predictor(batch, beta)?;
        let value: f64 = batch
            .y
            .iter()
            .zip(theta.iter())
            .map(|(&y, &t)| y * t - self.cumulant(t))
            .sum();
        if !value.is_finite() {
            return Err(Error::NumericOverflow("log-likelihood"));
        }
        Ok(value)
    }

    /// Score `Xᵀ(y − b′(Xβ))`.
    pub fn score(&self, batch: &Batch, beta: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        let theta = self.linear_predictor(batch, beta)?;
        let resid = Array1::from_iter(
            batch
                .y
                .iter()
                .zip(theta.iter())
                .map(|(&y, &t)| y - self.mean(t)),
        );
        let u = batch.x.t().dot(&resid);
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow("score"));
        }
        Ok(u)
    }

    /// Per-observation weights `b″(θᵢ)`.
    pub fn weights(&self, batch: &Batch, beta: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        let theta = self.linear_predictor(batch, beta)?;
        Ok(theta.mapv(|t| self.variance(t)))
    }

    /// Diagonal of the negative Hessian: `Σᵢ b″(θᵢ) x²ᵢⱼ`.
    pub fn hessian_diag(&self, batch: &Batch, beta: ArrayView1<'_, f64>) -> Result<Array1<f64>> {
        let w = self.weights(batch, beta)?;
        let mut out = Array1::zeros(batch.p());
        for (row, &wi) in batch.x.rows().into_iter().zip(w.iter()) {
            for (o, &x) in out.iter_mut().zip(row.iter()) {
                *o += wi * x * x;
            }
        }
        Ok(out)
    }

    /// The `[idx, idx]` block of the negative Hessian. `idx` must be sorted and distinct.
    pub fn hessian_sub(
        &self,
        batch: &Batch,
        beta: ArrayView1<'_, f64>,
        idx: &[usize],
    ) -> Result<Array2<f64>> {
        check_index_set(idx, batch.p())?;
        let w = self.weights(batch, beta)?;
        let k = idx.len();
        let mut h = Array2::zeros((k, k));
        let mut xs = vec![0.0; k];
        for (row, &wi) in batch.x.rows().into_iter().zip(w.iter()) {
            for (slot, &j) in xs.iter_mut().zip(idx) {
                *slot = row[j];
            }
            for a in 0..k {
                let wa = wi * xs[a];
                if wa == 0.0 {
                    continue;
                }
                for b in 0..=a {
                    h[[a, b]] += wa * xs[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                h[[b, a]] = h[[a, b]];
            }
        }
        Ok(h)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "gaussian_identity" | "linear" => Ok(Family::GaussianIdentity),
            "logit" | "binomial" | "binomial_logit" | "logistic" => Ok(Family::BinomialLogit),
            other => Err(Error::invalid(format!("unknown family `{other}`"))),
        }
    }
}

/// Validates a sorted, distinct index set against dimension `p`.
pub(crate) fn check_index_set(idx: &[usize], p: usize) -> Result<()> {
    for w in idx.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::invalid(format!(
                "index set must be sorted and distinct, got {idx:?}"
            )));
        }
    }
    if let Some(&last) = idx.last() {
        if last >= p {
            return Err(Error::invalid(format!(
                "index {last} out of range for dimension {p}"
            )));
        }
    }
    Ok(())
}

/// One arriving chunk of the stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub(crate) y: Array1<f64>,
    pub(crate) x: Array2<f64>,
    pub(crate) index: usize,
}

impl Batch {
    /// Builds a batch, checking shapes and finiteness. `index` is 1-based.
    pub fn new(y: Array1<f64>, x: Array2<f64>, index: usize) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::invalid("batch has no observations"));
        }
        if x.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                context: "batch rows",
                expected: y.len(),
                found: x.nrows(),
            });
        }
        if x.ncols() == 0 {
            return Err(Error::invalid("batch has no covariates"));
        }
        if index == 0 {
            return Err(Error::invalid("batch index is 1-based"));
        }
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("batch contains non-finite values"));
        }
        Ok(Batch { y, x, index })
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn with_index(mut self, index: usize) -> Self {
        self.index = index;
        self
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Stacks batches row-wise into one batch carrying `index`.
    pub fn concat(batches: &[Batch], index: usize) -> Result<Batch> {
        let first = batches
            .first()
            .ok_or_else(|| Error::invalid("cannot pool an empty list of batches"))?;
        let p = first.p();
        if let Some(bad) = batches.iter().find(|b| b.p() != p) {
            return Err(Error::DimensionMismatch {
                context: "pooled batch covariates",
                expected: p,
                found: bad.p(),
            });
        }
        let n: usize = batches.iter().map(Batch::n).sum();
        let mut y = Array1::zeros(n);
        let mut x = Array2::zeros((n, p));
        let mut start = 0;
        for b in batches {
            let end = start + b.n();
            y.slice_mut(ndarray::s![start..end]).assign(&b.y);
            x.slice_mut(ndarray::s![start..end, ..]).assign(&b.x);
            start = end;
        }
        Batch::new(y, x, index)
    }
}
