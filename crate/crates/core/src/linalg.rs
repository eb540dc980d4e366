//! Dense symmetric linear algebra on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues at or above `-PSD_TOL` are treated as rounding noise.
pub const PSD_TOL: f64 = 1e-8;

pub fn max_asymmetry(k: &DMatrix<f64>) -> f64 {
    let n = k.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((k[(i, j)] - k[(j, i)]).abs());
        }
    }
    worst
}

pub fn ensure_square(k: &DMatrix<f64>) -> Result<()> {
    if !k.is_square() {
        return Err(Error::NotSquare {
            rows: k.nrows(),
            cols: k.ncols(),
        });
    }
    Ok(())
}

/// Errors unless `k` is square and symmetric to within `tol`.
pub fn ensure_symmetric(k: &DMatrix<f64>, tol: f64) -> Result<()> {
    ensure_square(k)?;
    let asym = max_asymmetry(k);
    if asym > tol {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues ascending and
/// eigenvectors as the matching columns.
pub fn symmetric_eigen(k: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    ensure_square(k)?;
    let n = k.nrows();
    let sym = (k + k.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, 0)
        .ok_or_else(|| Error::Degenerate("symmetric eigen-decomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

pub fn min_eigenvalue(k: &DMatrix<f64>) -> Result<f64> {
    let (values, _) = symmetric_eigen(k)?;
    Ok(values[0])
}

/// Principal square root of a positive semidefinite matrix.
///
/// Eigenvalues in `[-PSD_TOL, 0)` are clipped to zero; anything more negative
/// is rejected.
pub fn psd_sqrt(k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (values, vectors) = symmetric_eigen(k)?;
    if values[0] < -PSD_TOL {
        return Err(Error::NegativeEigenvalue(values[0]));
    }
    let roots = values.map(|v| v.max(0.0).sqrt());
    Ok(&vectors * DMatrix::from_diagonal(&roots) * vectors.transpose())
}

/// Solves `(k + λI) X = rhs`.
pub fn solve_regularized(k: &DMatrix<f64>, lambda: f64, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_square(k)?;
    let n = k.nrows();
    if rhs.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rhs.nrows(),
        });
    }
    let a = k + DMatrix::identity(n, n) * lambda;
    if let Some(chol) = a.clone().cholesky() {
        return Ok(chol.solve(rhs));
    }
    let lu = a.lu();
    let x = lu.solve(rhs).ok_or_else(|| {
        Error::Singular(format!("K + {lambda}·I is not invertible; increase the regularization"))
    })?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular(format!(
            "K + {lambda}·I is numerically singular; increase the regularization"
        )));
    }
    Ok(x)
}
