//! Rectangular Mach-Zehnder meshes driven by data-encoded phases.
//!
//! A mesh has `modes` waveguides and `columns` layers of MZIs. Column `c`
//! (zero based) places its MZIs on mode pairs starting at 0 when `c` is even
//! and at 1 when `c` is odd, so columns alternate `m/2` and `(m-1)/2`
//! interferometers. Each MZI consumes two consecutive phases `(θ, φ)` in the
//! order columns left to right, pairs top to bottom, and acts as
//!
//! ```text
//! T(θ, φ) = i e^{iθ/2} [ e^{iφ} sin(θ/2)   cos(θ/2) ]
//!                      [ e^{iφ} cos(θ/2)  -sin(θ/2) ]
//! ```
//!
//! on its mode pair. The mesh unitary is `U = T_k ⋯ T_1`.

use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `‖U†U − I‖_max` accepted by [`MeshUnitary::from_matrix`].
pub const UNITARITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeshConfig {
    modes: usize,
    columns: usize,
}

impl MeshConfig {
    pub fn new(modes: usize, columns: usize) -> Result<Self> {
        if modes < 2 {
            return Err(Error::InvalidConfig(format!(
                "mesh needs at least 2 modes, got {modes}"
            )));
        }
        if columns < 1 {
            return Err(Error::InvalidConfig("mesh needs at least 1 column".into()));
        }
        Ok(Self { modes, columns })
    }

    /// Mesh with as many columns as modes.
    pub fn square(modes: usize) -> Result<Self> {
        Self::new(modes, modes)
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    /// Top mode of every MZI, in phase order.
    pub fn mzi_positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.columns).flat_map(move |c| {
            let start = c % 2;
            (start..self.modes - 1).step_by(2).map(move |top| (c, top))
        })
    }

    pub fn mzi_count(&self) -> usize {
        let even = self.modes / 2;
        let odd = (self.modes - 1) / 2;
        let full_pairs = self.columns / 2;
        full_pairs * (even + odd) + (self.columns % 2) * even
    }

    /// Dimension of the data points this mesh encodes: two phases per MZI.
    pub fn data_dim(&self) -> usize {
        2 * self.mzi_count()
    }
}

/// Phase settings for every MZI of a mesh, each in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVector(Vec<f64>);

impl PhaseVector {
    pub fn new(cfg: &MeshConfig, phases: Vec<f64>) -> Result<Self> {
        if phases.len() != cfg.data_dim() {
            return Err(Error::DimensionMismatch {
                expected: cfg.data_dim(),
                found: phases.len(),
            });
        }
        if let Some((index, &value)) = phases
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..TAU).contains(*p))
        {
            return Err(Error::PhaseOutOfRange { index, value });
        }
        Ok(Self(phases))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Maps a data point in `[0,1]^d` to phases `θ_j = 2π x_j mod 2π`.
///
/// Components outside `[0, 1]` are rejected rather than wrapped.
pub fn encode_phases(cfg: &MeshConfig, x: &[f64]) -> Result<PhaseVector> {
    if x.len() != cfg.data_dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.data_dim(),
            found: x.len(),
        });
    }
    let mut phases = Vec::with_capacity(x.len());
    for (index, &value) in x.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfRange { index, value });
        }
        phases.push((TAU * value).rem_euclid(TAU));
    }
    Ok(PhaseVector(phases))
}

/// An `m×m` unitary matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshUnitary(DMatrix<Complex64>);

impl MeshUnitary {
    /// Wraps an arbitrary matrix after checking it is square and unitary.
    pub fn from_matrix(matrix: DMatrix<Complex64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        let dev = unitarity_deviation(&matrix);
        if dev >= UNITARITY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(Self(matrix))
    }

    pub fn identity(modes: usize) -> Self {
        Self(DMatrix::identity(modes, modes))
    }

    /// Balanced two-mode beam splitter `(1/√2)[[1, 1], [1, −1]]`.
    pub fn beam_splitter() -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self(DMatrix::from_row_slice(2, 2, &[h, h, h, -h]))
    }

    pub fn modes(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    /// Matrix product `self · rhs`.
    pub fn compose(&self, rhs: &MeshUnitary) -> Self {
        Self(&self.0 * &rhs.0)
    }

    pub fn unitarity_deviation(&self) -> f64 {
        unitarity_deviation(&self.0)
    }
}

fn unitarity_deviation(u: &DMatrix<Complex64>) -> f64 {
    let gram = u.adjoint() * u;
    let n = u.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    dev
}

/// 2×2 transfer matrix of one MZI with internal phase `theta` and external
/// phase `phi`, row major.
pub fn mzi_transfer(theta: f64, phi: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    let global = Complex64::i() * Complex64::from_polar(1.0, theta / 2.0);
    let ext = Complex64::from_polar(1.0, phi);
    [
        [global * ext * s, global * c],
        [global * ext * c, -global * s],
    ]
}

pub fn build_unitary(cfg: &MeshConfig, phases: &PhaseVector) -> Result<MeshUnitary> {
    let p = phases.as_slice();
    if p.len() != cfg.data_dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.data_dim(),
            found: p.len(),
        });
    }
    let m = cfg.modes();
    let mut u = DMatrix::<Complex64>::identity(m, m);
    // Left-multiplying by each block mixes rows `top` and `top + 1`; MZIs of
    // one column touch disjoint rows so their order within a column is free.
    for (q, (_, top)) in cfg.mzi_positions().enumerate() {
        let t = mzi_transfer(p[2 * q], p[2 * q + 1]);
        for col in 0..m {
            let a = u[(top, col)];
            let b = u[(top + 1, col)];
            u[(top, col)] = t[0][0] * a + t[0][1] * b;
            u[(top + 1, col)] = t[1][0] * a + t[1][1] * b;
        }
    }
    Ok(MeshUnitary(u))
}

/// Encodes `x` and builds `U(x)`.
pub fn unitary_for_point(cfg: &MeshConfig, x: &[f64]) -> Result<MeshUnitary> {
    build_unitary(cfg, &encode_phases(cfg, x)?)
}

/// `U(x_i)† · U(x_j)`, the single circuit realizing the pairwise overlap.
pub fn product_unitary(cfg: &MeshConfig, x_i: &[f64], x_j: &[f64]) -> Result<MeshUnitary> {
    let ui = unitary_for_point(cfg, x_i)?;
    let uj = unitary_for_point(cfg, x_j)?;
    Ok(ui.adjoint().compose(&uj))
}
