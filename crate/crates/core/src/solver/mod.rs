//! The streaming engine.
//!
//! A [`SolverState`] is the entire memory of a stream: the current
//! coefficients, the cumulative diagonal negative Hessian over all `p`
//! coordinates, and a dense cumulative Hessian block over the indices that
//! have ever been active. Each [`SolverState::process_batch`] call
//!
//! 1. linearizes the incoming batch's score at the previous estimate,
//! 2. picks λ by the online BIC over a log-spaced grid,
//! 3. thresholds every coordinate of the separable surrogate at that λ,
//! 4. refits the surviving coordinates with a renewable Newton step, and
//! 5. folds the batch's Hessian into the cumulative statistics.
//!
//! The batch is not retained.

mod offline;

use log::{debug, warn};
use ndarray::{Array1, Array2, ArrayView1};

pub use offline::{fit_mle_on, fit_penalized_path};

use crate::error::{Error, Result};
use crate::glm::{check_index_set, Batch, Family};
use crate::linalg::solve_spd;
use crate::penalty::{CoordinateStat, PenaltyConfig};
use crate::tuning::{select_lambda_from_zw, BicTrace};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub penalty: PenaltyConfig,
    pub lambda_grid_size: usize,
    pub lambda_min_ratio: f64,
    pub cd_tol: f64,
    /// Cap on coordinate-descent passes for the first-batch offline fit.
    pub cd_max_passes: usize,
    /// Newton steps in the renewable refit; 1 is the one-step estimator.
    pub refit_max_steps: usize,
    /// When false, coordinate 0 (the intercept column) is never penalized.
    pub penalize_intercept: bool,
    /// Skips selection and holds the active set fixed at these indices.
    pub pinned_active: Option<Vec<usize>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            penalty: PenaltyConfig::lasso(),
            lambda_grid_size: 100,
            lambda_min_ratio: 1e-3,
            cd_tol: 1e-7,
            cd_max_passes: 1000,
            refit_max_steps: 1,
            penalize_intercept: true,
            pinned_active: None,
        }
    }
}

impl SolverConfig {
    pub fn new(penalty: PenaltyConfig) -> Self {
        SolverConfig {
            penalty,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.penalty.validate()?;
        if self.lambda_grid_size < 2 {
            return Err(Error::invalid("lambda_grid_size must be at least 2"));
        }
        if !(self.lambda_min_ratio > 0.0 && self.lambda_min_ratio < 1.0) {
            return Err(Error::invalid("lambda_min_ratio must lie in (0, 1)"));
        }
        if !(self.cd_tol > 0.0) {
            return Err(Error::invalid("cd_tol must be positive"));
        }
        if self.cd_max_passes == 0 || self.refit_max_steps == 0 {
            return Err(Error::invalid("cd_max_passes and refit_max_steps must be positive"));
        }
        if let Some(pinned) = &self.pinned_active {
            for w in pinned.windows(2) {
                if w[0] >= w[1] {
                    return Err(Error::invalid("pinned_active must be sorted and distinct"));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn is_penalized(&self, j: usize) -> bool {
        self.penalize_intercept || j != 0
    }
}

/// Exact minimizer of the separable surrogate at `lambda`: every coordinate
/// is thresholded independently. Coordinates with `W_j = 0` are pinned to
/// zero; an unpenalized intercept takes `Z_0/W_0`.
pub fn threshold_coordinates(
    z: &Array1<f64>,
    w: &Array1<f64>,
    lambda: f64,
    config: &SolverConfig,
) -> Array1<f64> {
    Array1::from_iter(z.iter().zip(w.iter()).enumerate().map(|(j, (&zj, &wj))| {
        if wj <= 0.0 {
            0.0
        } else if !config.is_penalized(j) {
            zj / wj
        } else {
            config
                .penalty
                .update(CoordinateStat::new(zj, wj), lambda)
                .unwrap_or(0.0)
        }
    }))
}

/// Indices of the literal nonzeros.
pub fn select_active(candidate: ArrayView1<'_, f64>) -> Vec<usize> {
    candidate
        .iter()
        .enumerate()
        .filter(|(_, &v)| v != 0.0)
        .map(|(j, _)| j)
        .collect()
}

fn sorted_union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(&x), Some(&y)) if x < y => {
                i += 1;
                x
            }
            (Some(_), Some(&y)) => {
                j += 1;
                y
            }
            (Some(&x), None) => {
                i += 1;
                x
            }
            (None, Some(&y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        out.push(next);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub(crate) family: Family,
    pub(crate) p: usize,
    pub(crate) batches: usize,
    pub(crate) samples: usize,
    pub(crate) beta: Array1<f64>,
    pub(crate) cum_w: Array1<f64>,
    pub(crate) tracked: Vec<usize>,
    pub(crate) cum_h: Array2<f64>,
    pub(crate) active: Vec<usize>,
    pub(crate) lambda_history: Vec<f64>,
}

impl SolverState {
    pub fn family(&self) -> Family {
        self.family
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of consumed batches `b`.
    pub fn batches(&self) -> usize {
        self.batches
    }

    /// Total consumed observations `N_b`.
    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn beta(&self) -> ArrayView1<'_, f64> {
        self.beta.view()
    }

    /// Cumulative diagonal negative Hessian.
    pub fn cum_w(&self) -> ArrayView1<'_, f64> {
        self.cum_w.view()
    }

    /// Union of every active set seen so far; indexes the rows of [`Self::cum_h`].
    pub fn tracked(&self) -> &[usize] {
        &self.tracked
    }

    /// Cumulative negative Hessian over [`Self::tracked`].
    pub fn cum_h(&self) -> &Array2<f64> {
        &self.cum_h
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn lambda_history(&self) -> &[f64] {
        &self.lambda_history
    }

    /// Reassembles a state from its stored parts, validating every invariant.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        family: Family,
        batches: usize,
        samples: usize,
        beta: Array1<f64>,
        cum_w: Array1<f64>,
        tracked: Vec<usize>,
        cum_h: Array2<f64>,
        active: Vec<usize>,
        lambda_history: Vec<f64>,
    ) -> Result<Self> {
        let state = SolverState {
            family,
            p: beta.len(),
            batches,
            samples,
            beta,
            cum_w,
            tracked,
            cum_h,
            active,
            lambda_history,
        };
        state.check_invariants()?;
        Ok(state)
    }

    /// Structural invariants: shapes, index sets, sparsity pattern and
    /// nonnegativity of the diagonal information.
    pub fn check_invariants(&self) -> Result<()> {
        let p = self.p;
        if self.cum_w.len() != p {
            return Err(Error::DimensionMismatch {
                context: "cumulative diagonal Hessian",
                expected: p,
                found: self.cum_w.len(),
            });
        }
        check_index_set(&self.tracked, p)?;
        check_index_set(&self.active, p)?;
        let k = self.tracked.len();
        if self.cum_h.dim() != (k, k) {
            return Err(Error::DimensionMismatch {
                context: "cumulative Hessian block",
                expected: k,
                found: self.cum_h.nrows(),
            });
        }
        if let Some(j) = self.active.iter().find(|j| self.tracked.binary_search(j).is_err()) {
            return Err(Error::invalid(format!("active index {j} is not tracked")));
        }
        for (j, &b) in self.beta.iter().enumerate() {
            if b != 0.0 && self.active.binary_search(&j).is_err() {
                return Err(Error::invalid(format!("coefficient {j} is nonzero but inactive")));
            }
        }
        if self.cum_w.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::invalid("cumulative diagonal Hessian has a negative entry"));
        }
        if self.beta.iter().chain(self.cum_h.iter()).any(|v| !v.is_finite()) {
            return Err(Error::invalid("state holds non-finite values"));
        }
        if self.lambda_history.len() != self.batches {
            return Err(Error::invalid("lambda history length differs from batch count"));
        }
        Ok(())
    }

    pub(crate) fn check_batch_dim(&self, batch: &Batch) -> Result<()> {
        if batch.p() != self.p {
            return Err(Error::DimensionMismatch {
                context: "batch covariates",
                expected: self.p,
                found: batch.p(),
            });
        }
        Ok(())
    }

    /// Runs the offline penalized fit on the first batch and seeds the state.
    pub fn init_first_batch(
        batch: &Batch,
        config: &SolverConfig,
        family: Family,
    ) -> Result<(SolverState, BicTrace)> {
        config.validate()?;
        if batch.index() != 1 {
            return Err(Error::BatchOrder {
                expected: 1,
                found: batch.index(),
            });
        }
        family.check_response(batch)?;
        if let Some(pinned) = &config.pinned_active {
            check_index_set(pinned, batch.p())?;
        }
        let (candidate, trace) = fit_penalized_path(family, batch, config)?;
        let active = match &config.pinned_active {
            Some(pinned) => pinned.clone(),
            None => select_active(candidate.view()),
        };
        if trace.is_degenerate() && config.pinned_active.is_none() {
            debug!("first batch is degenerate: lambda_max = 0, empty model");
        }
        let beta = match fit_mle_on(family, batch, &active, &candidate, config) {
            Ok(b) => b,
            Err(Error::RefitDegenerate { indices }) => {
                warn!("first-batch MLE refit is singular on {indices:?}; keeping penalized estimate");
                restrict(&candidate, &active)
            }
            Err(e) => return Err(e),
        };
        let cum_w = family.hessian_diag(batch, beta.view())?;
        let cum_h = family.hessian_sub(batch, beta.view(), &active)?;
        let state = SolverState {
            family,
            p: batch.p(),
            batches: 1,
            samples: batch.n(),
            beta,
            cum_w,
            tracked: active.clone(),
            cum_h,
            active,
            lambda_history: vec![trace.chosen_lambda],
        };
        Ok((state, trace))
    }

    /// `W = cumW + diag J_b(β̂_{b−1})` and `Z = U_b(β̂_{b−1}) + β̂_{b−1} ∘ W`.
    pub fn compute_zw(&self, batch: &Batch) -> Result<(Array1<f64>, Array1<f64>)> {
        self.check_batch_dim(batch)?;
        let u = self.family.score(batch, self.beta.view())?;
        let w = &self.cum_w + &self.family.hessian_diag(batch, self.beta.view())?;
        let z = &u + &(&self.beta * &w);
        Ok((z, w))
    }

    /// Minimizer of the diagonal surrogate at `lambda`.
    pub fn coordinate_descent(
        &self,
        batch: &Batch,
        lambda: f64,
        config: &SolverConfig,
    ) -> Result<Array1<f64>> {
        if !(lambda > 0.0) {
            return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
        }
        let (z, w) = self.compute_zw(batch)?;
        Ok(threshold_coordinates(&z, &w, lambda, config))
    }

    /// Cumulative Hessian entry for any pair of indices. Untracked indices
    /// contribute their cumulative diagonal and no cross information.
    fn cumulative_entry(&self, a: usize, b: usize) -> f64 {
        match (self.tracked.binary_search(&a), self.tracked.binary_search(&b)) {
            (Ok(i), Ok(k)) => self.cum_h[[i, k]],
            _ if a == b => self.cum_w[a],
            _ => 0.0,
        }
    }

    fn cumulative_block(&self, idx: &[usize]) -> Array2<f64> {
        let k = idx.len();
        Array2::from_shape_fn((k, k), |(i, l)| self.cumulative_entry(idx[i], idx[l]))
    }

    /// Renewable Newton refit of the coordinates in `active`.
    ///
    /// Minimizes `½(β − β̂_{b−1})ᵀ H (β − β̂_{b−1}) − ℓ_b(β)` over vectors
    /// supported on `active`, where `H` is the cumulative negative Hessian,
    /// by up to `refit_max_steps` Newton steps started from `β̂_{b−1}` with
    /// the inactive coordinates zeroed. When the active set is unchanged the
    /// first step is `β̂_{b−1} + (H_AA + J_b,AA)⁻¹ U_b,A(β̂_{b−1})`.
    pub fn refit_renewable_mle(
        &self,
        batch: &Batch,
        active: &[usize],
        config: &SolverConfig,
    ) -> Result<Array1<f64>> {
        self.check_batch_dim(batch)?;
        check_index_set(active, self.p)?;
        let mut beta = restrict(&self.beta, active);
        if active.is_empty() {
            return Ok(beta);
        }
        let cum_block = self.cumulative_block(active);
        for step in 0..config.refit_max_steps {
            let u = self.family.score(batch, beta.view())?;
            let diff = &beta - &self.beta;
            let moved: Vec<usize> = select_active(diff.view());
            let grad = Array1::from_iter(active.iter().map(|&a| {
                let carry: f64 = moved
                    .iter()
                    .map(|&c| self.cumulative_entry(a, c) * diff[c])
                    .sum();
                u[a] - carry
            }));
            let hess = &cum_block + &self.family.hessian_sub(batch, beta.view(), active)?;
            let delta = solve_spd(&hess, &grad).ok_or_else(|| Error::RefitDegenerate {
                indices: active.to_vec(),
            })?;
            let mut max_change = 0.0_f64;
            for (&a, &d) in active.iter().zip(delta.iter()) {
                beta[a] += d;
                max_change = max_change.max(d.abs());
            }
            if beta.iter().any(|v| !v.is_finite()) {
                return Err(Error::NumericOverflow("renewable refit"));
            }
            if step + 1 < config.refit_max_steps && max_change < config.cd_tol {
                break;
            }
        }
        Ok(beta)
    }

    /// Consumes one batch of the stream and returns its λ search trace.
    ///
    /// On error the state is left untouched.
    pub fn process_batch(&mut self, batch: &Batch, config: &SolverConfig) -> Result<BicTrace> {
        let expected = self.batches + 1;
        if batch.index() != expected {
            return Err(Error::BatchOrder {
                expected,
                found: batch.index(),
            });
        }
        self.check_batch_dim(batch)?;
        self.family.check_response(batch)?;

        let (trace, active) = match &config.pinned_active {
            Some(pinned) => {
                check_index_set(pinned, self.p)?;
                (BicTrace::pinned(), pinned.clone())
            }
            None => {
                let (z, w) = self.compute_zw(batch)?;
                let trace = select_lambda_from_zw(self, batch, config, &z, &w)?;
                let candidate = threshold_coordinates(&z, &w, trace.chosen_lambda, config);
                let active = select_active(candidate.view());
                (trace, active)
            }
        };

        let beta = match self.refit_renewable_mle(batch, &active, config) {
            Ok(b) => b,
            Err(Error::RefitDegenerate { indices }) => {
                warn!(
                    "batch {}: refit singular on {indices:?}; keeping penalized estimate",
                    batch.index()
                );
                let (z, w) = self.compute_zw(batch)?;
                restrict(&threshold_coordinates(&z, &w, trace.chosen_lambda, config), &active)
            }
            Err(e) => return Err(e),
        };

        let tracked = sorted_union(&self.tracked, &active);
        let cum_h = &self.cumulative_block(&tracked)
            + &self.family.hessian_sub(batch, beta.view(), &tracked)?;
        let cum_w = &self.cum_w + &self.family.hessian_diag(batch, beta.view())?;

        let limit = self.p.min(10 * active.len().max(1));
        if tracked.len() > limit && tracked.len() > self.tracked.len() {
            warn!(
                "batch {}: tracked set grew to {} indices (active {}, p {})",
                batch.index(),
                tracked.len(),
                active.len(),
                self.p
            );
        }

        self.beta = beta;
        self.cum_w = cum_w;
        self.cum_h = cum_h;
        self.tracked = tracked;
        self.active = active;
        self.lambda_history.push(trace.chosen_lambda);
        self.batches += 1;
        self.samples += batch.n();
        Ok(trace)
    }
}

/// Copy of `beta` with every coordinate outside `idx` set to zero.
pub(crate) fn restrict(beta: &Array1<f64>, idx: &[usize]) -> Array1<f64> {
    let mut out = Array1::zeros(beta.len());
    for &j in idx {
        out[j] = beta[j];
    }
    out
}
