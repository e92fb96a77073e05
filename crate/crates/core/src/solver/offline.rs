//! Offline fits on a single batch: the penalized λ path used to start a
//! stream (and as the pooled-data reference), and the unpenalized MLE on a
//! fixed support.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{Error, Result};
use crate::glm::{check_index_set, Batch, Family};
use crate::linalg::solve_spd;
use crate::penalty::CoordinateStat;
use crate::tuning::{lambda_grid, lambda_max, offline_bic_terms, support_size, BicTrace};

use super::{restrict, SolverConfig};

const MLE_MAX_ITER: usize = 100;
const MAX_HALVINGS: usize = 30;

/// Weighted Gram matrix `Xᵀ diag(w) X`.
fn weighted_gram(batch: &Batch, weights: &Array1<f64>) -> Array2<f64> {
    let x = batch.x();
    let xw = &x * &weights.view().insert_axis(Axis(1));
    xw.t().dot(&x)
}

/// Penalized fit at one λ by iteratively reweighted cyclic coordinate descent.
///
/// Each outer cycle recomputes the score and the weighted Gram matrix at the
/// current iterate and runs Gauss–Seidel passes over the resulting quadratic
/// model, cycling over the nonzero coordinates until they settle and then
/// sweeping all coordinates to confirm. The Gaussian model is already
/// quadratic, so one outer cycle suffices and its Gram matrix is shared
/// across the path through `gaussian_gram`. The total number of passes is
/// capped by `config.cd_max_passes`.
fn fit_at_lambda(
    family: Family,
    batch: &Batch,
    gaussian_gram: &mut Option<Array2<f64>>,
    lambda: f64,
    start: &Array1<f64>,
    config: &SolverConfig,
) -> Result<Array1<f64>> {
    let p = batch.p();
    let mut beta = start.clone();
    let mut passes = 0;
    loop {
        let anchor = beta.clone();
        let gram = match family {
            Family::GaussianIdentity => gaussian_gram
                .get_or_insert_with(|| weighted_gram(batch, &Array1::ones(batch.n())))
                .clone(),
            Family::BinomialLogit => {
                let theta = batch.x().dot(&beta);
                weighted_gram(batch, &theta.mapv(|t| family.variance(t)))
            }
        };
        // Gradient of the quadratic model, kept current as coordinates move.
        let mut grad = family.score(batch, beta.view())?;

        let mut sweep = |only_nonzero: bool, beta: &mut Array1<f64>| -> f64 {
            let mut max_delta = 0.0_f64;
            for j in 0..p {
                let old = beta[j];
                if only_nonzero && old == 0.0 {
                    continue;
                }
                let wj = gram[[j, j]];
                let new = if wj <= 0.0 {
                    0.0
                } else {
                    let zj = grad[j] + wj * old;
                    if config.is_penalized(j) {
                        config
                            .penalty
                            .update(CoordinateStat::new(zj, wj), lambda)
                            .unwrap_or(0.0)
                    } else {
                        zj / wj
                    }
                };
                let delta = new - old;
                if delta != 0.0 {
                    grad.scaled_add(-delta, &gram.row(j));
                    beta[j] = new;
                    max_delta = max_delta.max(delta.abs());
                }
            }
            max_delta
        };

        loop {
            let full = sweep(false, &mut beta);
            passes += 1;
            if full < config.cd_tol || passes >= config.cd_max_passes {
                break;
            }
            while passes < config.cd_max_passes {
                let partial = sweep(true, &mut beta);
                passes += 1;
                if partial < config.cd_tol {
                    break;
                }
            }
        }

        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow("offline coordinate descent"));
        }
        let moved = max_abs_diff(beta.view(), anchor.view());
        if family == Family::GaussianIdentity
            || moved < config.cd_tol
            || passes >= config.cd_max_passes
        {
            return Ok(beta);
        }
    }
}

/// Starting point for the λ path: the MLE over the unpenalized coordinates
/// (the intercept when it is exempt), zero elsewhere.
fn path_start(family: Family, batch: &Batch, config: &SolverConfig) -> Result<Array1<f64>> {
    let zero = Array1::zeros(batch.p());
    if config.penalize_intercept {
        return Ok(zero);
    }
    match fit_mle_on(family, batch, &[0], &zero, config) {
        Ok(b) => Ok(b),
        Err(Error::RefitDegenerate { .. }) => Ok(zero),
        Err(e) => Err(e),
    }
}

/// Offline penalized fit on one batch with λ chosen by
/// `ŝ·ln(n) − 2ℓ(β̂_λ)` over a descending, warm-started grid.
///
/// Returns the penalized estimate at the chosen λ and the search trace.
/// When the active set is pinned no search runs and the returned estimate is
/// the path start.
pub fn fit_penalized_path(
    family: Family,
    batch: &Batch,
    config: &SolverConfig,
) -> Result<(Array1<f64>, BicTrace)> {
    let start = Array1::zeros(batch.p());
    let diag = family.hessian_diag(batch, start.view())?;
    if diag.iter().all(|&w| w <= 0.0) {
        return Err(Error::DegenerateStream);
    }
    let start = path_start(family, batch, config)?;
    if config.pinned_active.is_some() {
        return Ok((start, BicTrace::pinned()));
    }

    let u = family.score(batch, start.view())?;
    let penalized: Array1<f64> = u
        .iter()
        .zip(diag.iter())
        .enumerate()
        .filter(|&(j, (_, &w))| config.is_penalized(j) && w > 0.0)
        .map(|(_, (&v, _))| v)
        .collect();
    let lmax = if penalized.is_empty() {
        0.0
    } else {
        lambda_max(penalized.view())?
    };
    if lmax == 0.0 {
        let terms = offline_bic_terms(family, batch, start.view())?;
        let s_hat = support_size(start.view());
        return Ok((start, BicTrace::degenerate(terms.total(), s_hat)));
    }

    let lambdas = lambda_grid(lmax, config.lambda_grid_size, config.lambda_min_ratio)?;
    let mut values = Vec::with_capacity(lambdas.len());
    let mut s_hat = Vec::with_capacity(lambdas.len());
    let mut best: Option<(f64, Array1<f64>)> = None;
    let mut gram = None;
    let mut warm = start;
    for &lambda in &lambdas {
        let fit = fit_at_lambda(family, batch, &mut gram, lambda, &warm, config)?;
        let value = offline_bic_terms(family, batch, fit.view())?.total();
        values.push(value);
        s_hat.push(support_size(fit.view()));
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, fit.clone()));
        }
        warm = fit;
    }
    let trace = BicTrace::from_grid(lambdas, values, s_hat);
    let (_, estimate) = best.expect("grid has at least two points");
    Ok((estimate, trace))
}

/// Unpenalized maximum-likelihood fit restricted to `support`, by Newton's
/// method with step halving, started from `start` (restricted to `support`).
pub fn fit_mle_on(
    family: Family,
    batch: &Batch,
    support: &[usize],
    start: &Array1<f64>,
    config: &SolverConfig,
) -> Result<Array1<f64>> {
    check_index_set(support, batch.p())?;
    let mut beta = restrict(start, support);
    if support.is_empty() {
        return Ok(beta);
    }
    let mut loglik = family.log_likelihood(batch, beta.view())?;
    for _ in 0..MLE_MAX_ITER {
        let u = family.score(batch, beta.view())?;
        let grad = Array1::from_iter(support.iter().map(|&j| u[j]));
        let hess = family.hessian_sub(batch, beta.view(), support)?;
        let delta = solve_spd(&hess, &grad).ok_or_else(|| Error::RefitDegenerate {
            indices: support.to_vec(),
        })?;

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let mut trial = beta.clone();
            for (&j, &d) in support.iter().zip(delta.iter()) {
                trial[j] += step * d;
            }
            match family.log_likelihood(batch, trial.view()) {
                Ok(v) if v >= loglik - 1e-12 * loglik.abs().max(1.0) => {
                    accepted = Some((trial, v));
                    break;
                }
                _ => step *= 0.5,
            }
        }
        let Some((trial, v)) = accepted else {
            break;
        };
        let change = max_abs_diff(trial.view(), beta.view());
        beta = trial;
        loglik = v;
        if change < config.cd_tol {
            break;
        }
    }
    Ok(beta)
}

fn max_abs_diff(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()))
}
