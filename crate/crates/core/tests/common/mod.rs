//! Independent reference implementations shared by the integration suites.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use renewglm::simulation::{gen_batch, true_beta, ExperimentConfig};
use renewglm::{Batch, Family, PenaltyConfig, SolverConfig, SolverState};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// LASSO, SCAD and MCP written directly from their piecewise definitions.
pub fn penalty_value(kind: &str, t: f64, lambda: f64, r: f64) -> f64 {
    let t = t.abs();
    match kind {
        "lasso" => lambda * t,
        "scad" => {
            if t <= lambda {
                lambda * t
            } else if t <= r * lambda {
                (2.0 * r * lambda * t - t * t - lambda * lambda) / (2.0 * (r - 1.0))
            } else {
                lambda * lambda * (r + 1.0) / 2.0
            }
        }
        "mcp" => {
            if t <= r * lambda {
                lambda * t - t * t / (2.0 * r)
            } else {
                r * lambda * lambda / 2.0
            }
        }
        _ => unreachable!(),
    }
}

/// Grid minimizer of `½Wβ² − Zβ + p_λ(β)` over `[−10, 10]` with step 1e-4.
pub fn brute_force_argmin(kind: &str, z: f64, w: f64, lambda: f64, r: f64) -> f64 {
    let steps = 200_000;
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=steps {
        let b = -10.0 + 1e-4 * k as f64;
        let f = 0.5 * w * b * b - z * b + penalty_value(kind, b, lambda, r);
        if f < best.0 {
            best = (f, b);
        }
    }
    best.1
}

pub fn to_dmatrix(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn to_dvector(a: &Array1<f64>) -> DVector<f64> {
    DVector::from_iterator(a.len(), a.iter().copied())
}

/// Least squares on the columns in `support`, by QR of the pooled design.
pub fn pooled_least_squares(x: &Array2<f64>, y: &Array1<f64>, support: &[usize]) -> Array1<f64> {
    let xa = DMatrix::from_fn(x.nrows(), support.len(), |i, k| x[[i, support[k]]]);
    let qr = xa.qr();
    let qty = qr.q().transpose() * to_dvector(y);
    let coef = qr.r().solve_upper_triangular(&qty).expect("full column rank");
    let mut out = Array1::zeros(x.ncols());
    for (k, &j) in support.iter().enumerate() {
        out[j] = coef[k];
    }
    out
}

/// `Xᵀ diag(v(θ)) X` computed row by row.
pub fn negative_hessian(family: Family, x: &Array2<f64>, beta: &Array1<f64>) -> DMatrix<f64> {
    let p = x.ncols();
    let mut h = DMatrix::zeros(p, p);
    for row in x.rows() {
        let theta: f64 = row.iter().zip(beta.iter()).map(|(a, b)| a * b).sum();
        let v = match family {
            Family::GaussianIdentity => 1.0,
            Family::BinomialLogit => {
                let m = 1.0 / (1.0 + (-theta).exp());
                m * (1.0 - m)
            }
        };
        for i in 0..p {
            for k in 0..p {
                h[(i, k)] += v * row[i] * row[k];
            }
        }
    }
    h
}

/// Simulated batches of the standard design (p = 10 unless overridden).
pub fn stream(family: Family, p: usize, sizes: &[usize], seed: u64) -> Vec<Batch> {
    let mut design = ExperimentConfig::new(family, SolverConfig::new(PenaltyConfig::lasso()));
    design.p = p;
    let beta0 = true_beta(p, family).unwrap();
    let mut r = rng(seed);
    sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| gen_batch(&design, beta0.view(), n, i + 1, &mut r).unwrap())
        .collect()
}

/// Random composition of `total` into parts of at least `min_part`.
pub fn random_partition<R: Rng>(total: usize, min_part: usize, max_parts: usize, rng: &mut R) -> Vec<usize> {
    let parts = rng.random_range(2..=max_parts.min(total / min_part));
    let mut cuts: Vec<usize> = Vec::new();
    while cuts.len() < parts - 1 {
        let c = rng.random_range(min_part..=total - min_part);
        let ok = cuts.iter().all(|&d: &usize| d.abs_diff(c) >= min_part);
        if ok {
            cuts.push(c);
        }
    }
    cuts.sort_unstable();
    let mut sizes = Vec::new();
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(total)) {
        sizes.push(c - prev);
        prev = c;
    }
    sizes
}

/// Splits a pooled sample into consecutive batches of the given sizes.
pub fn split(y: &Array1<f64>, x: &Array2<f64>, sizes: &[usize]) -> Vec<Batch> {
    let mut start = 0;
    sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let rows = start..start + n;
            start += n;
            Batch::new(
                y.slice(ndarray::s![rows.clone()]).to_owned(),
                x.slice(ndarray::s![rows, ..]).to_owned(),
                i + 1,
            )
            .unwrap()
        })
        .collect()
}

/// One randomized thresholding case.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdCase {
    pub z: f64,
    pub w: f64,
    pub lambda: f64,
    pub r: f64,
}

/// Draws cases with `Z ∈ [−5, 5]`, `W ∈ [0.2, 5]`, `λ ∈ (0, 2]` and a valid
/// `r`, keeping only those whose unpenalized solution `Z/W` lies inside the
/// search grid.
pub fn threshold_cases(kind: &str, count: usize, seed: u64) -> Vec<ThresholdCase> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let z: f64 = r.random_range(-5.0..=5.0);
        let w: f64 = r.random_range(0.2..=5.0);
        let lambda = 2.0 - r.random_range(0.0..2.0);
        let shape = match kind {
            "scad" => r.random_range(2.05..=6.0),
            "mcp" => r.random_range(1.05..=6.0),
            _ => 0.0,
        };
        if (z / w).abs() <= 9.9 {
            out.push(ThresholdCase { z, w, lambda, r: shape });
        }
    }
    out
}

/// Largest gap between the closed-form update and the grid minimizer.
pub fn max_oracle_error(kind: &str, cases: &[ThresholdCase]) -> (f64, ThresholdCase) {
    use renewglm::penalty::{coord_update_lasso, coord_update_mcp, coord_update_scad};
    use renewglm::CoordinateStat;
    let mut worst = (0.0, cases[0]);
    for &c in cases {
        let s = CoordinateStat::new(c.z, c.w);
        let got = match kind {
            "lasso" => coord_update_lasso(s, c.lambda),
            "scad" => coord_update_scad(s, c.lambda, c.r),
            "mcp" => coord_update_mcp(s, c.lambda, c.r),
            _ => unreachable!(),
        }
        .expect("W > 0");
        let err = (got - brute_force_argmin(kind, c.z, c.w, c.lambda, c.r)).abs();
        if err > worst.0 {
            worst = (err, c);
        }
    }
    worst
}

/// Splits a 10-batch stream after batch 5 through a checkpoint and checks
/// the resumed run against the uninterrupted one, bit for bit.
pub fn resume_is_bit_identical(family: Family, penalty: PenaltyConfig, seed: u64) -> bool {
    use renewglm::persistence::{checkpoint_string, load_checkpoint, save_checkpoint};
    use renewglm::SolverState;

    let mut sizes = vec![1000];
    sizes.extend([150; 9]);
    let batches = stream(family, 10, &sizes, seed);
    let config = SolverConfig::new(penalty);
    let (mut straight, _) = SolverState::init_first_batch(&batches[0], &config, family).unwrap();
    for b in &batches[1..] {
        straight.process_batch(b, &config).unwrap();
    }
    let (mut head, _) = SolverState::init_first_batch(&batches[0], &config, family).unwrap();
    for b in &batches[1..5] {
        head.process_batch(b, &config).unwrap();
    }
    let mut file = Vec::new();
    save_checkpoint(&head, &config, &mut file).unwrap();
    drop(head);
    let (mut resumed, config) = load_checkpoint(std::io::Cursor::new(file)).unwrap();
    for b in &batches[5..] {
        resumed.process_batch(b, &config).unwrap();
    }
    let same_bits = |a: ndarray::ArrayView1<f64>, b: ndarray::ArrayView1<f64>| {
        a.iter().zip(b.iter()).all(|(x, y)| x.to_bits() == y.to_bits())
    };
    resumed == straight
        && same_bits(resumed.beta(), straight.beta())
        && same_bits(resumed.cum_w(), straight.cum_w())
        && checkpoint_string(&resumed, &config) == checkpoint_string(&straight, &config)
}

pub fn random_problem(family: Family, n: usize, p: usize, seed: u64) -> (Batch, Array1<f64>) {
    let mut r = rng(seed);
    let x = Array2::from_shape_fn((n, p), |_| r.random_range(-1.5..1.5));
    let beta = Array1::from_shape_fn(p, |_| r.random_range(-1.0..1.0));
    let y = match family {
        Family::GaussianIdentity => Array1::from_shape_fn(n, |_| r.random_range(-3.0..3.0)),
        Family::BinomialLogit => Array1::from_shape_fn(n, |_| f64::from(r.random_bool(0.4))),
    };
    (Batch::new(y, x, 1).unwrap(), beta)
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    let scale = b.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-12);
    diff / scale
}

/// Central-difference score and Hessian errors for one random problem.
pub fn finite_difference_errors(family: Family, seed: u64) -> (f64, f64) {
    let (batch, beta) = random_problem(family, 60, 6, seed);
    let h = 1e-5;
    let score = family.score(&batch, beta.view()).unwrap();
    let fd_score: Vec<f64> = (0..6)
        .map(|j| {
            let mut up = beta.clone();
            let mut dn = beta.clone();
            up[j] += h;
            dn[j] -= h;
            (family.log_likelihood(&batch, up.view()).unwrap()
                - family.log_likelihood(&batch, dn.view()).unwrap())
                / (2.0 * h)
        })
        .collect();
    let all: Vec<usize> = (0..6).collect();
    let hess = family.hessian_sub(&batch, beta.view(), &all).unwrap();
    let mut fd_hess = Vec::new();
    let mut an_hess = Vec::new();
    for j in 0..6 {
        let mut up = beta.clone();
        let mut dn = beta.clone();
        up[j] += h;
        dn[j] -= h;
        let su = family.score(&batch, up.view()).unwrap();
        let sd = family.score(&batch, dn.view()).unwrap();
        for i in 0..6 {
            fd_hess.push(-(su[i] - sd[i]) / (2.0 * h));
            an_hess.push(hess[[i, j]]);
        }
    }
    (rel_err(&fd_score, score.as_slice().unwrap()), rel_err(&fd_hess, &an_hess))
}

/// Pooled 2000 × 10 Gaussian sample, split at random, refit on a pinned set,
/// compared with least squares on the pooled data.
pub fn gaussian_partition_error(seed: u64, support: &[usize]) -> f64 {
    let pooled = &stream(Family::GaussianIdentity, 10, &[2000], seed)[0];
    let y = pooled.y().to_owned();
    let x = pooled.x().to_owned();
    let reference = pooled_least_squares(&x, &y, support);
    let mut r = rng(seed + 1000);
    let sizes = random_partition(2000, 20, 40, &mut r);
    let mut config = SolverConfig::new(PenaltyConfig::lasso());
    config.pinned_active = Some(support.to_vec());
    let batches = split(&y, &x, &sizes);
    let (mut state, _) = SolverState::init_first_batch(&batches[0], &config, Family::GaussianIdentity).unwrap();
    for b in &batches[1..] {
        state.process_batch(b, &config).unwrap();
    }
    state
        .beta()
        .iter()
        .zip(reference.iter())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
}
