//! Labelling unlabelled data so that the quantum kernel is maximally favoured
//! over the coherent one.
//!
//! For Grams `K_Q`, `K_C` the regularized geometric difference is
//! `g = sqrt(‖√K_Q (K_C + λI)⁻¹ √K_Q‖₂)`. The top eigenvector `v` of that
//! matrix yields the un-thresholded labelling `√K_Q v`, which saturates
//! `y^T (K_C + λI)⁻¹ y = g² · y^T K_Q⁻¹ y`; its signs are the binary task.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{Engine, Evaluator, GramMatrix, Kernel, PhotonicSetup};
use crate::linalg::{self, PSD_TOL};
use crate::par::Execution;
use crate::shots::derive_seed;

pub const DEFAULT_LAMBDA: f64 = 0.02;

/// Redraws allowed when a labelling puts every point in one class.
pub const MAX_REDRAWS: usize = 10;

const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub points: Vec<Vec<f64>>,
    pub labels: Option<Vec<i8>>,
    pub seed: u64,
}

impl Dataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Option<Vec<i8>>, seed: u64) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "dataset needs at least 2 points, got {}",
                points.len()
            )));
        }
        let d = points[0].len();
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: p.len(),
                });
            }
            if let Some(&value) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::OutOfRange { index: i, value });
            }
        }
        if let Some(y) = &labels {
            check_labels(y, points.len())?;
        }
        Ok(Self { points, labels, seed })
    }

    /// `n` points drawn uniformly from `[0,1)^dim`.
    pub fn uniform(n: usize, dim: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..n)
            .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
            .collect();
        Self::new(points, None, seed)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    /// Number of `(+1, −1)` labels.
    pub fn class_counts(&self) -> Option<(usize, usize)> {
        self.labels.as_ref().map(|y| class_counts(y))
    }
}

pub fn check_labels(y: &[i8], n: usize) -> Result<()> {
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: y.len(),
        });
    }
    if let Some(&bad) = y.iter().find(|&&l| l != 1 && l != -1) {
        return Err(Error::InvalidConfig(format!("label {bad} is not ±1")));
    }
    Ok(())
}

pub fn class_counts(y: &[i8]) -> (usize, usize) {
    let pos = y.iter().filter(|&&l| l == 1).count();
    (pos, y.len() - pos)
}

/// How the binary labels are read off the top eigenvector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelRule {
    /// `sign(√K_Q · v)`.
    #[default]
    SqrtKernelProjection,
    /// `sign(v)`.
    EigenvectorSign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometricDifferenceResult {
    pub g: f64,
    /// Unit-norm top eigenvector, first non-negligible component positive.
    pub eigenvector: Vec<f64>,
    /// `√K_Q · v` before thresholding.
    pub raw_labels: Vec<f64>,
    pub labels: Vec<i8>,
    pub lambda: f64,
}

/// `y^T (K + λI)⁻¹ y`.
pub fn model_complexity(k: &DMatrix<f64>, y: &[f64], lambda: f64) -> Result<f64> {
    linalg::ensure_square(k)?;
    if y.len() != k.nrows() {
        return Err(Error::DimensionMismatch {
            expected: k.nrows(),
            found: y.len(),
        });
    }
    let rhs = DMatrix::from_column_slice(y.len(), 1, y);
    let z = linalg::solve_regularized(k, lambda, &rhs)?;
    Ok(y.iter().zip(z.iter()).map(|(a, b)| a * b).sum())
}

/// `sign` with ties mapped to `+1`.
pub fn sign_label(v: f64) -> i8 {
    if v < 0.0 {
        -1
    } else {
        1
    }
}

pub fn geometric_difference(
    k_q: &DMatrix<f64>,
    k_c: &DMatrix<f64>,
    lambda: f64,
    rule: LabelRule,
) -> Result<GeometricDifferenceResult> {
    linalg::ensure_symmetric(k_q, SYMMETRY_TOL)?;
    linalg::ensure_symmetric(k_c, SYMMETRY_TOL)?;
    if k_q.shape() != k_c.shape() {
        return Err(Error::DimensionMismatch {
            expected: k_q.nrows(),
            found: k_c.nrows(),
        });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!("lambda must be non-negative, got {lambda}")));
    }
    let min_c = linalg::min_eigenvalue(k_c)?;
    if min_c < -PSD_TOL {
        return Err(Error::NegativeEigenvalue(min_c));
    }
    let sqrt_q = linalg::psd_sqrt(k_q)?;
    let m = &sqrt_q * linalg::solve_regularized(k_c, lambda, &sqrt_q)?;
    let (values, vectors) = linalg::symmetric_eigen(&m)?;
    let n = values.len();
    let top = values[n - 1];
    if !(top > 0.0) {
        return Err(Error::Degenerate(format!("largest eigenvalue {top} is not positive")));
    }
    let mut v: DVector<f64> = vectors.column(n - 1).into_owned();
    v /= v.norm();
    let scale = v.amax();
    if let Some(first) = v.iter().find(|c| c.abs() > 1e-12 * scale) {
        if *first < 0.0 {
            v = -v;
        }
    }
    let raw = &sqrt_q * &v;
    let labels = match rule {
        LabelRule::SqrtKernelProjection => raw.iter().map(|&c| sign_label(c)).collect(),
        LabelRule::EigenvectorSign => v.iter().map(|&c| sign_label(c)).collect(),
    };
    Ok(GeometricDifferenceResult {
        g: top.sqrt(),
        eigenvector: v.iter().copied().collect(),
        raw_labels: raw.iter().copied().collect(),
        labels,
        lambda,
    })
}

/// A labelled dataset together with the Grams that produced its labels.
#[derive(Debug, Clone)]
pub struct Task {
    pub dataset: Dataset,
    pub geometric: GeometricDifferenceResult,
    pub quantum_gram: GramMatrix,
    pub coherent_gram: GramMatrix,
    /// Number of redraws needed to get both classes.
    pub redraws: usize,
}

impl Task {
    /// Fraction of points in the minority class.
    pub fn balance(&self) -> f64 {
        let (p, n) = class_counts(&self.geometric.labels);
        p.min(n) as f64 / (p + n) as f64
    }
}

/// Draws `n` uniform points and labels them by the geometric difference of
/// the exact quantum and coherent Grams.
///
/// If every label comes out equal the points are redrawn with a seed derived
/// from `seed`, at most [`MAX_REDRAWS`] times.
pub fn generate_task(
    setup: &PhotonicSetup,
    n: usize,
    lambda: f64,
    seed: u64,
    rule: LabelRule,
    exec: Execution,
) -> Result<Task> {
    if n < 4 {
        return Err(Error::InvalidConfig(format!("task needs at least 4 points, got {n}")));
    }
    let quantum = Evaluator::new(Kernel::Quantum, Some(setup.clone()))?;
    let coherent = Evaluator::new(Kernel::Coherent, Some(setup.clone()))?;
    for attempt in 0..=MAX_REDRAWS {
        let draw_seed = if attempt == 0 {
            seed
        } else {
            derive_seed(seed, &[attempt as u64])
        };
        let mut dataset = Dataset::uniform(n, setup.mesh.data_dim(), draw_seed)?;
        let k_q = quantum.gram(&dataset.points, Engine::Exact, exec)?;
        let k_c = coherent.gram(&dataset.points, Engine::Exact, exec)?;
        let geometric = geometric_difference(&k_q.values, &k_c.values, lambda, rule)?;
        let (pos, neg) = class_counts(&geometric.labels);
        if pos == 0 || neg == 0 {
            continue;
        }
        dataset.labels = Some(geometric.labels.clone());
        return Ok(Task {
            dataset,
            geometric,
            quantum_gram: k_q,
            coherent_gram: k_c,
            redraws: attempt,
        });
    }
    Err(Error::Degenerate(format!(
        "every labelling was single-class after {MAX_REDRAWS} redraws"
    )))
}
