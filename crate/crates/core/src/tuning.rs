//! Penalty-level selection: `λ_max`, the log-spaced grid, and the online BIC.
//!
//! For batch `b` a candidate `β̂_λ` is scored by
//!
//! ```text
//! ŝ·ln(N_b) + (β̂_λ − β̂_{b−1})ᵀ diag(W_{b−1}) (β̂_λ − β̂_{b−1}) − 2ℓ_b(β̂_λ; D_b)
//! ```
//!
//! where `W_{b−1}` is the cumulative diagonal negative Hessian carried in the
//! solver state. For the first batch the carry-over term is absent.

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::glm::Batch;
use crate::solver::{threshold_coordinates, SolverConfig, SolverState};

/// Per-batch record of the λ search.
#[derive(Debug, Clone, PartialEq)]
pub struct BicTrace {
    /// Candidate λ values, strictly descending.
    pub lambdas: Vec<f64>,
    pub bic_values: Vec<f64>,
    pub s_hat_per_lambda: Vec<usize>,
    pub chosen_lambda: f64,
    pub chosen_index: usize,
}

impl BicTrace {
    /// Trace for a batch whose `λ_max` is zero: nothing can enter the model,
    /// so the search collapses onto the sentinel `λ = 0`.
    pub(crate) fn degenerate(bic: f64, s_hat: usize) -> Self {
        BicTrace {
            lambdas: vec![0.0],
            bic_values: vec![bic],
            s_hat_per_lambda: vec![s_hat],
            chosen_lambda: 0.0,
            chosen_index: 0,
        }
    }

    /// Trace used when the active set is pinned and no search runs.
    pub(crate) fn pinned() -> Self {
        BicTrace {
            lambdas: Vec::new(),
            bic_values: Vec::new(),
            s_hat_per_lambda: Vec::new(),
            chosen_lambda: 0.0,
            chosen_index: 0,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.chosen_lambda == 0.0
    }

    /// Builds a trace from evaluated grid points, choosing the smallest BIC
    /// and breaking ties toward the larger λ.
    pub(crate) fn from_grid(lambdas: Vec<f64>, bic_values: Vec<f64>, s_hat: Vec<usize>) -> Self {
        let chosen_index = argmin_prefer_first(&bic_values);
        BicTrace {
            chosen_lambda: lambdas[chosen_index],
            lambdas,
            bic_values,
            s_hat_per_lambda: s_hat,
            chosen_index,
        }
    }
}

/// Index of the minimum; the earliest index wins ties.
pub(crate) fn argmin_prefer_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// `max_j |Z_j|`.
pub fn lambda_max(z: ArrayView1<'_, f64>) -> Result<f64> {
    if z.is_empty() {
        return Err(Error::invalid("lambda_max of an empty vector"));
    }
    Ok(z.iter().fold(0.0_f64, |m, v| m.max(v.abs())))
}

/// `size` log-uniform points from `lmax` down to `min_ratio·lmax`.
pub fn lambda_grid(lmax: f64, size: usize, min_ratio: f64) -> Result<Vec<f64>> {
    if !(lmax > 0.0 && lmax.is_finite()) {
        return Err(Error::invalid(format!("lambda grid needs lmax > 0, got {lmax}")));
    }
    if size < 2 {
        return Err(Error::invalid(format!("lambda grid needs at least 2 points, got {size}")));
    }
    if !(min_ratio > 0.0 && min_ratio < 1.0) {
        return Err(Error::invalid(format!(
            "lambda min ratio must lie in (0, 1), got {min_ratio}"
        )));
    }
    let last = (size - 1) as f64;
    Ok((0..size)
        .map(|k| match k {
            0 => lmax,
            k if k == size - 1 => min_ratio * lmax,
            k => lmax * min_ratio.powf(k as f64 / last),
        })
        .collect())
}

/// The three additive pieces of the online BIC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BicTerms {
    /// `ŝ·ln(N_b)`
    pub complexity: f64,
    /// `Σ_j W_{b−1,j}(β̂_{λ,j} − β̂_{b−1,j})²`
    pub carry_over: f64,
    /// `−2ℓ_b(β̂_λ)`
    pub misfit: f64,
}

impl BicTerms {
    pub fn total(&self) -> f64 {
        self.complexity + self.carry_over + self.misfit
    }
}

pub(crate) fn support_size(beta: ArrayView1<'_, f64>) -> usize {
    beta.iter().filter(|&&v| v != 0.0).count()
}

/// BIC terms for a first-batch (offline) candidate: no carry-over.
pub(crate) fn offline_bic_terms(
    family: crate::glm::Family,
    batch: &Batch,
    candidate: ArrayView1<'_, f64>,
) -> Result<BicTerms> {
    Ok(BicTerms {
        complexity: support_size(candidate) as f64 * (batch.n() as f64).ln(),
        carry_over: 0.0,
        misfit: -2.0 * family.log_likelihood(batch, candidate)?,
    })
}

/// Online BIC terms for `candidate` on the incoming batch.
pub fn bic_terms(state: &SolverState, batch: &Batch, candidate: ArrayView1<'_, f64>) -> Result<BicTerms> {
    state.check_batch_dim(batch)?;
    if candidate.len() != state.p() {
        return Err(Error::DimensionMismatch {
            context: "BIC candidate",
            expected: state.p(),
            found: candidate.len(),
        });
    }
    let n_b = (state.samples() + batch.n()) as f64;
    let carry_over = candidate
        .iter()
        .zip(state.beta().iter())
        .zip(state.cum_w().iter())
        .map(|((&c, &prev), &w)| {
            let d = c - prev;
            w * d * d
        })
        .sum();
    Ok(BicTerms {
        complexity: support_size(candidate) as f64 * n_b.ln(),
        carry_over,
        misfit: -2.0 * state.family().log_likelihood(batch, candidate)?,
    })
}

pub fn bic(state: &SolverState, batch: &Batch, candidate: ArrayView1<'_, f64>) -> Result<f64> {
    Ok(bic_terms(state, batch, candidate)?.total())
}

/// Scores every grid λ for the incoming batch and returns the BIC minimizer.
///
/// `Z` and `W` are computed once at `β̂_{b−1}`; each grid point is the exact
/// minimizer of the separable surrogate at that λ.
pub fn select_lambda(
    state: &SolverState,
    batch: &Batch,
    config: &SolverConfig,
) -> Result<(f64, BicTrace)> {
    let (z, w) = state.compute_zw(batch)?;
    let trace = select_lambda_from_zw(state, batch, config, &z, &w)?;
    Ok((trace.chosen_lambda, trace))
}

pub(crate) fn select_lambda_from_zw(
    state: &SolverState,
    batch: &Batch,
    config: &SolverConfig,
    z: &Array1<f64>,
    w: &Array1<f64>,
) -> Result<BicTrace> {
    let penalized: Array1<f64> = z
        .iter()
        .zip(w.iter())
        .enumerate()
        .filter(|&(j, (_, &wj))| config.is_penalized(j) && wj > 0.0)
        .map(|(_, (&zj, _))| zj)
        .collect();
    let lmax = if penalized.is_empty() {
        0.0
    } else {
        lambda_max(penalized.view())?
    };
    if lmax == 0.0 {
        let candidate = threshold_coordinates(z, w, 0.0, config);
        let b = bic(state, batch, candidate.view())?;
        return Ok(BicTrace::degenerate(b, support_size(candidate.view())));
    }
    let lambdas = lambda_grid(lmax, config.lambda_grid_size, config.lambda_min_ratio)?;
    let mut values = Vec::with_capacity(lambdas.len());
    let mut s_hat = Vec::with_capacity(lambdas.len());
    for &lambda in &lambdas {
        let candidate = threshold_coordinates(z, w, lambda, config);
        values.push(bic(state, batch, candidate.view())?);
        s_hat.push(support_size(candidate.view()));
    }
    Ok(BicTrace::from_grid(lambdas, values, s_hat))
}
