//! Soft-margin SVM on a precomputed kernel.
//!
//! The dual is solved by SMO with second-order working-set selection. A
//! small positive curvature is substituted when a pair direction has
//! non-positive curvature, so indefinite kernels still converge to a
//! stationary point.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taskgen::{check_labels, class_counts, sign_label};

pub const DEFAULT_C: f64 = 10.0;
pub const C_GRID: [f64; 3] = [1.0, 10.0, 100.0];
pub const DEFAULT_SPLIT_RATIO: f64 = 2.0 / 3.0;

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub c: f64,
    /// Stop once the maximal KKT violating pair gap drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: DEFAULT_C,
            tol: 1e-9,
            max_iter: 1_000_000,
        }
    }
}

impl SvmParams {
    pub fn with_c(c: f64) -> Self {
        Self { c, ..Self::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub labels: Vec<i8>,
    /// Positions of the training points in the dataset they came from.
    pub train_indices: Vec<usize>,
    pub c: f64,
    pub objective: f64,
    pub iterations: usize,
    pub gap: f64,
}

impl SvmModel {
    pub fn support_count(&self) -> usize {
        self.alphas.iter().filter(|&&a| a > 0.0).count()
    }

    /// `Σ_j α_j y_j K(x, x_j) + b` for each row of `k_cross`, which must have
    /// one column per training point.
    pub fn decision_function(&self, k_cross: &DMatrix<f64>) -> Result<Vec<f64>> {
        if k_cross.ncols() != self.alphas.len() {
            return Err(Error::DimensionMismatch {
                expected: self.alphas.len(),
                found: k_cross.ncols(),
            });
        }
        Ok((0..k_cross.nrows())
            .map(|r| {
                let s: f64 = (0..k_cross.ncols())
                    .filter(|&j| self.alphas[j] != 0.0)
                    .map(|j| self.alphas[j] * f64::from(self.labels[j]) * k_cross[(r, j)])
                    .sum();
                s + self.bias
            })
            .collect())
    }

    pub fn predict(&self, k_cross: &DMatrix<f64>) -> Result<Vec<i8>> {
        Ok(self.decision_function(k_cross)?.into_iter().map(sign_label).collect())
    }
}

/// Dual objective `½ αᵀQα − Σα` with `Q_ij = y_i y_j K_ij`.
pub fn dual_objective(k: &DMatrix<f64>, y: &[i8], alphas: &[f64]) -> f64 {
    let n = alphas.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alphas[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alphas[i] * alphas[j] * f64::from(y[i] * y[j]) * k[(i, j)];
        }
    }
    0.5 * quad - alphas.iter().sum::<f64>()
}

pub fn train(k: &DMatrix<f64>, y: &[i8], c: f64) -> Result<SvmModel> {
    train_with(k, y, SvmParams::with_c(c))
}

pub fn train_with(k: &DMatrix<f64>, y: &[i8], params: SvmParams) -> Result<SvmModel> {
    if !k.is_square() {
        return Err(Error::NotSquare {
            rows: k.nrows(),
            cols: k.ncols(),
        });
    }
    let n = k.nrows();
    check_labels(y, n)?;
    let (pos, neg) = class_counts(y);
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    let c = params.c;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidConfig(format!("C must be positive, got {c}")));
    }
    if k.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("kernel matrix has non-finite entries".into()));
    }

    let yf: Vec<f64> = y.iter().map(|&l| f64::from(l)).collect();
    let q = |i: usize, j: usize| yf[i] * yf[j] * k[(i, j)];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut gap;

    loop {
        // i maximizes -y_t G_t over the "up" set.
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let can_up = if y[t] == 1 { alpha[t] < c } else { alpha[t] > 0.0 };
            if can_up && -yf[t] * grad[t] >= gmax {
                gmax = -yf[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        if let Some(i) = i_sel {
            let mut obj_min = f64::INFINITY;
            for t in 0..n {
                let can_low = if y[t] == 1 { alpha[t] > 0.0 } else { alpha[t] < c };
                if !can_low {
                    continue;
                }
                let v = yf[t] * grad[t];
                gmax2 = gmax2.max(v);
                let diff = gmax + v;
                if diff > 0.0 {
                    let mut quad = k[(i, i)] + k[(t, t)] - 2.0 * k[(i, t)];
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let obj = -diff * diff / quad;
                    if obj <= obj_min {
                        obj_min = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        gap = gmax + gmax2;
        let (i, j) = match (i_sel, j_sel) {
            (Some(i), Some(j)) if gap >= params.tol => (i, j),
            _ => break,
        };
        if iterations >= params.max_iter {
            return Err(Error::NotConverged {
                iterations,
                residual: gap,
            });
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = k[(i, i)] + k[(j, j)] + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = k[(i, i)] + k[(j, j)] - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(i, t) * di + q(j, t) * dj;
        }
    }

    // Bias from the free vectors, else the middle of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut free_sum) = (0usize, 0.0);
    for t in 0..n {
        let yg = yf[t] * grad[t];
        if alpha[t] >= c {
            if y[t] == -1 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] == 1 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 { free_sum / free as f64 } else { 0.5 * (ub + lb) };
    let objective = 0.5 * alpha.iter().zip(&grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>();

    Ok(SvmModel {
        alphas: alpha,
        bias: -rho,
        labels: y.to_vec(),
        train_indices: (0..n).collect(),
        c,
        objective,
        iterations,
        gap: gap.max(0.0),
    })
}

/// Largest violation of the margin conditions on the training set.
pub fn kkt_residual(model: &SvmModel, k: &DMatrix<f64>) -> Result<f64> {
    let f = model.decision_function(k)?;
    let mut worst: f64 = 0.0;
    for (t, &ft) in f.iter().enumerate() {
        let margin = f64::from(model.labels[t]) * ft;
        let a = model.alphas[t];
        let v = if a <= 0.0 {
            (1.0 - margin).max(0.0)
        } else if a >= model.c {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(v);
    }
    Ok(worst)
}

pub fn accuracy(predicted: &[i8], actual: &[i8]) -> Result<f64> {
    if predicted.len() != actual.len() {
        return Err(Error::DimensionMismatch {
            expected: actual.len(),
            found: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::InvalidConfig("accuracy of an empty set".into()));
    }
    let hits = predicted.iter().zip(actual).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / actual.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Shuffled split with `ceil(ratio · n)` training points.
pub fn train_test_split(n: usize, ratio: f64, seed: u64) -> Result<Split> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidConfig(format!("split ratio must lie in (0,1), got {ratio}")));
    }
    let n_train = (ratio * n as f64 - 1e-9).ceil() as usize;
    if n_train == 0 || n_train >= n {
        return Err(Error::InvalidConfig(format!(
            "split ratio {ratio} leaves an empty side for {n} points"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = idx.split_off(n_train);
    Ok(Split { train: idx, test })
}

/// Training and test labels for a split.
pub fn split_labels(y: &[i8], split: &Split) -> (Vec<i8>, Vec<i8>) {
    (
        split.train.iter().map(|&i| y[i]).collect(),
        split.test.iter().map(|&i| y[i]).collect(),
    )
}

/// `k`-fold partition of `0..n` after a seeded shuffle.
pub fn folds(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::InvalidConfig(format!("cannot make {k} folds from {n} points")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = vec![Vec::new(); k];
    for (pos, i) in idx.into_iter().enumerate() {
        out[pos % k].push(i);
    }
    Ok(out)
}

fn submatrix(k: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| k[(rows[r], cols[c])])
}

/// Mean validation accuracy of `k`-fold cross-validation on a square Gram.
///
/// Folds whose training part is single-class count as chance level.
pub fn cross_validate(k: &DMatrix<f64>, y: &[i8], c: f64, n_folds: usize, seed: u64) -> Result<f64> {
    check_labels(y, k.nrows())?;
    let parts = folds(y.len(), n_folds, seed)?;
    let mut total = 0.0;
    for (f, held) in parts.iter().enumerate() {
        let fit: Vec<usize> = parts
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, p)| p.iter().copied())
            .collect();
        let y_fit: Vec<i8> = fit.iter().map(|&i| y[i]).collect();
        let y_held: Vec<i8> = held.iter().map(|&i| y[i]).collect();
        let acc = match train(&submatrix(k, &fit, &fit), &y_fit, c) {
            Ok(model) => accuracy(&model.predict(&submatrix(k, held, &fit))?, &y_held)?,
            Err(Error::SingleClass) => 0.5,
            Err(e) => return Err(e),
        };
        total += acc;
    }
    Ok(total / n_folds as f64)
}
