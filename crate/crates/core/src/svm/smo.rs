//! Sequential minimal optimization for the soft-margin SVM dual
//!
//! ```text
//! min_a  1/2 a^T Q a - e^T a   s.t.  y^T a = 0,  0 <= a_i <= C,
//! Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! The working pair is the maximal violating pair (first-order selection):
//! `i = argmax_{I_up} -y_t G_t`, `j = argmin_{I_low} -y_t G_t`. Training stops
//! once the violation `m - M` drops to `tol`, which bounds every KKT residual
//! `y_t f(x_t) - 1` by `tol`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::kernel::KernelMatrix;
use super::{SvmConfig, SvmModel, TrainingMeta};
use crate::error::{Error, Result};
use crate::features::SparseVector;

/// Curvature floor for pairs with a non-positive second derivative.
const TAU: f64 = 1e-12;
/// Multipliers at or below this magnitude are not kept as support vectors.
const SV_EPS: f64 = 1e-12;

struct Solver<'a> {
    kernel: KernelMatrix<'a>,
    y: &'a [f64],
    alpha: Vec<f64>,
    grad: Vec<f64>,
    c: f64,
}

impl Solver<'_> {
    fn in_up(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alpha[t] < self.c) || (self.y[t] < 0.0 && self.alpha[t] > 0.0)
    }

    fn in_low(&self, t: usize) -> bool {
        (self.y[t] > 0.0 && self.alpha[t] > 0.0) || (self.y[t] < 0.0 && self.alpha[t] < self.c)
    }

    fn score(&self, t: usize) -> f64 {
        -self.y[t] * self.grad[t]
    }

    /// Maximal violating pair and its violation `m - M`.
    fn select(&self) -> Option<(usize, usize, f64)> {
        let mut best_up: Option<(usize, f64)> = None;
        let mut best_low: Option<(usize, f64)> = None;
        for t in 0..self.y.len() {
            let s = self.score(t);
            if self.in_up(t) && best_up.is_none_or(|(_, b)| s > b) {
                best_up = Some((t, s));
            }
            if self.in_low(t) && best_low.is_none_or(|(_, b)| s < b) {
                best_low = Some((t, s));
            }
        }
        let ((i, m), (j, big_m)) = (best_up?, best_low?);
        Some((i, j, m - big_m))
    }

    /// Solves the two-variable subproblem and updates the gradient. Returns
    /// whether either multiplier moved.
    fn step(&mut self, i: usize, j: usize) -> bool {
        let row_i = self.kernel.row(i);
        let row_j = self.kernel.row(j);
        let (yi, yj, c) = (self.y[i], self.y[j], self.c);
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        let k_ij = row_i[j];

        if yi != yj {
            let mut quad = row_i[i] + row_j[j] - 2.0 * k_ij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let mut quad = row_i[i] + row_j[j] - 2.0 * k_ij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }

        let (d_i, d_j) = (ai - old_i, aj - old_j);
        if d_i == 0.0 && d_j == 0.0 {
            return false;
        }
        self.alpha[i] = ai;
        self.alpha[j] = aj;
        // Q_tk = y_t y_k K_tk
        let (si, sj) = (yi * d_i, yj * d_j);
        for t in 0..self.grad.len() {
            self.grad[t] += self.y[t] * (row_i[t] * si + row_j[t] * sj);
        }
        true
    }

    /// Bias `b` of `f(x) = sum_i a_i y_i K(x_i, x) + b`: the mean over free
    /// multipliers, or the midpoint of the feasible interval when none are free.
    fn bias(&self) -> f64 {
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free_sum, mut n_free) = (0.0, 0usize);
        for t in 0..self.y.len() {
            let yg = self.y[t] * self.grad[t];
            if self.alpha[t] >= self.c {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if self.alpha[t] <= 0.0 {
                if self.y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free_sum += yg;
                n_free += 1;
            }
        }
        let rho = if n_free > 0 {
            free_sum / n_free as f64
        } else {
            (ub + lb) / 2.0
        };
        -rho
    }

    /// Dual objective in maximization form, `e^T a - 1/2 a^T Q a`.
    fn objective(&self) -> f64 {
        -0.5 * self
            .alpha
            .iter()
            .zip(&self.grad)
            .map(|(a, g)| a * (g - 1.0))
            .sum::<f64>()
    }
}

/// Trains an RBF-kernel SVM. `labels` must be `+1` or `-1`.
pub fn train_smo(vectors: &[SparseVector], labels: &[i8], config: &SvmConfig) -> Result<SvmModel> {
    train_smo_with_features(vectors, labels, config, 0)
}

/// Like [`train_smo`]; `n_features` is the feature-space width used when
/// resolving `Gamma::Scale` (e.g. vocabulary size). The widest vector is used
/// when it is larger.
pub fn train_smo_with_features(
    vectors: &[SparseVector],
    labels: &[i8],
    config: &SvmConfig,
    n_features: usize,
) -> Result<SvmModel> {
    config.validate()?;
    if vectors.len() != labels.len() {
        return Err(Error::Config(format!(
            "{} vectors but {} labels",
            vectors.len(),
            labels.len()
        )));
    }
    if vectors.len() < 2 {
        return Err(Error::Config("SVM training needs at least two examples".into()));
    }
    if let Some(bad) = labels.iter().find(|&&l| l != 1 && l != -1) {
        return Err(Error::Config(format!("labels must be +1 or -1, got {bad}")));
    }
    if !(labels.contains(&1) && labels.contains(&-1)) {
        return Err(Error::Config("SVM training needs both classes; got a single class".into()));
    }
    if let Some(i) = vectors.iter().position(|v| v.values().iter().any(|x| !x.is_finite())) {
        return Err(Error::Data(format!("training vector {i} has a non-finite feature value")));
    }

    let gamma = super::kernel::resolve_gamma(config.gamma, vectors, n_features)?;
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let n = vectors.len();
    let mut solver = Solver {
        kernel: KernelMatrix::new(vectors, gamma, config.cache_bytes),
        y: &y,
        alpha: vec![0.0; n],
        grad: vec![-1.0; n],
        c: config.c,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let max_iterations = config.max_passes.saturating_mul(n.max(1));

    let mut iterations = 0usize;
    let mut converged = false;
    while iterations < max_iterations {
        let Some((i, j, violation)) = solver.select() else {
            converged = true;
            break;
        };
        if violation <= config.tol {
            converged = true;
            break;
        }
        iterations += 1;
        if solver.step(i, j) {
            continue;
        }
        // The greedy pair is numerically stuck; sweep the other violating
        // partners of `i` in seeded random order.
        let score_i = solver.score(i);
        let mut partners: Vec<usize> = (0..n)
            .filter(|&t| t != i && solver.in_low(t) && score_i - solver.score(t) > config.tol)
            .collect();
        partners.shuffle(&mut rng);
        if !partners.into_iter().any(|t| solver.step(i, t)) {
            log::warn!("SMO stalled after {iterations} iterations with violation {violation:e}");
            break;
        }
    }
    if !converged {
        log::warn!("SMO stopped before reaching tolerance {} ({iterations} iterations)", config.tol);
    }
    let (hits, misses) = solver.kernel.cache_stats();
    log::debug!("SMO: {iterations} iterations, kernel cache {hits} hits / {misses} misses");

    let bias = solver.bias();
    let objective = solver.objective();
    let mut support_vectors = Vec::new();
    let mut dual_coefs = Vec::new();
    for (t, &a) in solver.alpha.iter().enumerate() {
        if a.abs() > SV_EPS {
            support_vectors.push(vectors[t].clone());
            dual_coefs.push(a * y[t]);
        }
    }
    Ok(SvmModel {
        support_vectors,
        dual_coefs,
        bias,
        gamma,
        meta: TrainingMeta {
            c: config.c,
            tol: config.tol,
            iterations,
            objective,
            converged,
        },
    })
}
