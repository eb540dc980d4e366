//! Photonic and classical kernels, and Gram-matrix assembly.
//!
//! Photonic entries are transition probabilities `P(ψ | ψ)` through the single
//! circuit `U(x_i)†U(x_j)`. The unbunching kernel renormalizes the quantum
//! distribution over collision-free outcomes only and is not guaranteed to be
//! positive semidefinite (or even symmetric, so Grams mirror the upper triangle).

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    full_distribution, transition_probability, DistinguishabilityModel, FockState, OutputDistribution,
};
use crate::linalg;
use crate::mesh::{unitary_for_point, MeshConfig, MeshUnitary};
use crate::par::Execution;
use crate::shots::{derive_seed, estimate_kernel_entry, sample_counts, CoincidenceRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Kernel {
    /// Indistinguishable photons.
    Quantum,
    /// Distinguishable photons.
    Coherent,
    /// Photons with degree of indistinguishability `r`.
    Partial { r: f64 },
    /// Quantum statistics post-selected on collision-free outcomes.
    Unbunching,
    Gaussian { gamma: f64 },
    Polynomial { gamma: f64, offset: f64, degree: u32 },
    Linear,
    /// Infinite-width ReLU network with `depth` hidden layers.
    Ntk { depth: usize },
}

impl Kernel {
    pub fn is_photonic(&self) -> bool {
        matches!(
            self,
            Kernel::Quantum | Kernel::Coherent | Kernel::Partial { .. } | Kernel::Unbunching
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Quantum => "quantum",
            Kernel::Coherent => "coherent",
            Kernel::Partial { .. } => "partial",
            Kernel::Unbunching => "unbunching",
            Kernel::Gaussian { .. } => "gaussian",
            Kernel::Polynomial { .. } => "polynomial",
            Kernel::Linear => "linear",
            Kernel::Ntk { .. } => "ntk",
        }
    }

    /// Photon statistics backing a photonic kernel.
    pub fn distinguishability(&self) -> Option<DistinguishabilityModel> {
        match *self {
            Kernel::Quantum | Kernel::Unbunching => Some(DistinguishabilityModel::INDISTINGUISHABLE),
            Kernel::Coherent => Some(DistinguishabilityModel::DISTINGUISHABLE),
            Kernel::Partial { r } => DistinguishabilityModel::new(r).ok(),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Partial { r } => DistinguishabilityModel::new(r).map(|_| ()),
            Kernel::Gaussian { gamma } if !(gamma > 0.0 && gamma.is_finite()) => Err(
                Error::InvalidConfig(format!("gaussian gamma must be positive, got {gamma}")),
            ),
            Kernel::Polynomial { degree: 0, .. } => {
                Err(Error::InvalidConfig("polynomial degree must be positive".into()))
            }
            Kernel::Ntk { depth: 0 } => Err(Error::InvalidConfig("ntk depth must be positive".into())),
            _ => Ok(()),
        }
    }
}

/// How photonic Gram entries are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "engine", rename_all = "lowercase")]
pub enum Engine {
    Exact,
    /// Multinomial shot sampling; entry `(i, j)` uses a seed derived from
    /// `(seed, i, j)`.
    Sampled { shots: u64, seed: u64 },
}

/// Mesh and input state shared by all photonic kernel evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhotonicSetup {
    pub mesh: MeshConfig,
    pub psi: FockState,
}

impl PhotonicSetup {
    pub fn new(mesh: MeshConfig, psi: FockState) -> Result<Self> {
        if psi.modes() != mesh.modes() {
            return Err(Error::DimensionMismatch {
                expected: mesh.modes(),
                found: psi.modes(),
            });
        }
        if !psi.is_collision_free() {
            return Err(Error::Unsupported(format!(
                "input state {psi} has multiply occupied modes; only collision-free inputs are supported"
            )));
        }
        Ok(Self { mesh, psi })
    }
}

/// Kernel values over a set of row points and column points.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub values: DMatrix<f64>,
    pub kernel: Kernel,
    pub provenance: Engine,
}

impl GramMatrix {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_square(&self) -> bool {
        self.values.is_square()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    /// Rows `rows` and columns `cols` of this matrix, same tags.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> GramMatrix {
        GramMatrix {
            values: DMatrix::from_fn(rows.len(), cols.len(), |r, c| self.values[(rows[r], cols[c])]),
            kernel: self.kernel,
            provenance: self.provenance,
        }
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        linalg::min_eigenvalue(&self.values)
    }
}

/// Overlap kernel `P(ψ | ψ)` through `U(x_i)†U(x_j)` for the given statistics.
///
/// With indistinguishable photons this equals `|⟨ψ|U†(x_i)U(x_j)|ψ⟩|²`.
pub fn photonic_kernel_entry(
    setup: &PhotonicSetup,
    x_i: &[f64],
    x_j: &[f64],
    model: DistinguishabilityModel,
) -> Result<f64> {
    let ui = unitary_for_point(&setup.mesh, x_i)?;
    let uj = unitary_for_point(&setup.mesh, x_j)?;
    transition_probability(&ui.adjoint().compose(&uj), &setup.psi, &setup.psi, model)
}

/// `P(ψ) / Σ_{t collision free} P(t)`.
pub fn unbunching_kernel_entry(distribution: &OutputDistribution, psi: &FockState) -> Result<f64> {
    if !psi.is_collision_free() {
        return Err(Error::Unsupported(format!("{psi} is not collision free")));
    }
    let mass = distribution.collision_free_mass();
    if mass <= 0.0 {
        return Err(Error::Degenerate(
            "collision-free probability mass is zero; unbunching kernel undefined".into(),
        ));
    }
    Ok(distribution.probability(psi) / mass)
}

/// `exp(−γ‖x_i − x_j‖²)`.
pub fn gaussian_kernel(x_i: &[f64], x_j: &[f64], gamma: f64) -> f64 {
    let d2: f64 = x_i.iter().zip(x_j).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

pub fn linear_kernel(x_i: &[f64], x_j: &[f64]) -> f64 {
    x_i.iter().zip(x_j).map(|(a, b)| a * b).sum()
}

/// `(γ x_i·x_j + offset)^degree`.
pub fn polynomial_kernel(x_i: &[f64], x_j: &[f64], gamma: f64, offset: f64, degree: u32) -> f64 {
    (gamma * linear_kernel(x_i, x_j) + offset).powi(degree as i32)
}

/// Analytic neural tangent kernel of a fully connected ReLU network with
/// `depth` hidden layers in the infinite-width limit.
///
/// Weights have unit variance under the NTK parameterization, biases are
/// absent. Each hidden layer maps the covariance through the arc-cosine
/// closed forms
///
/// ```text
/// Σ' = √(Σ_xx Σ_yy) (sin θ + (π − θ) cos θ) / 2π,   Σ̇ = (π − θ) / 2π
/// ```
///
/// with `cos θ = Σ / √(Σ_xx Σ_yy)`, and the tangent kernel accumulates as
/// `Θ ← Θ·Σ̇ + Σ'`, starting from `Θ = Σ = x·y / d`.
pub fn ntk_kernel(x_i: &[f64], x_j: &[f64], depth: usize) -> Result<f64> {
    if x_i.len() != x_j.len() {
        return Err(Error::DimensionMismatch {
            expected: x_i.len(),
            found: x_j.len(),
        });
    }
    let d = x_i.len() as f64;
    let mut sxx = linear_kernel(x_i, x_i) / d;
    let mut syy = linear_kernel(x_j, x_j) / d;
    if sxx <= 0.0 || syy <= 0.0 {
        return Err(Error::Degenerate("ntk input with zero norm".into()));
    }
    let mut sxy = linear_kernel(x_i, x_j) / d;
    let mut theta_ntk = sxy;
    for _ in 0..depth {
        let scale = (sxx * syy).sqrt();
        let cos = (sxy / scale).clamp(-1.0, 1.0);
        let angle = cos.acos();
        let next = scale * (angle.sin() + (PI - angle) * cos) / (2.0 * PI);
        let deriv = (PI - angle) / (2.0 * PI);
        theta_ntk = theta_ntk * deriv + next;
        sxy = next;
        sxx /= 2.0;
        syy /= 2.0;
    }
    Ok(theta_ntk)
}

fn classical_entry(kernel: &Kernel, x_i: &[f64], x_j: &[f64]) -> Result<f64> {
    Ok(match *kernel {
        Kernel::Gaussian { gamma } => gaussian_kernel(x_i, x_j, gamma),
        Kernel::Polynomial { gamma, offset, degree } => polynomial_kernel(x_i, x_j, gamma, offset, degree),
        Kernel::Linear => linear_kernel(x_i, x_j),
        Kernel::Ntk { depth } => ntk_kernel(x_i, x_j, depth)?,
        _ => unreachable!("photonic kernels are evaluated on unitaries"),
    })
}

/// Stream tags keep seeds of square and rectangular Grams apart.
const SQUARE_STREAM: u64 = 0;
const CROSS_STREAM: u64 = 1;

/// Evaluates one kernel over point sets.
#[derive(Debug, Clone)]
pub struct Evaluator {
    kernel: Kernel,
    setup: Option<PhotonicSetup>,
}

impl Evaluator {
    pub fn new(kernel: Kernel, setup: Option<PhotonicSetup>) -> Result<Self> {
        kernel.validate()?;
        if kernel.is_photonic() && setup.is_none() {
            return Err(Error::InvalidConfig(format!(
                "{} kernel needs a mesh and input state",
                kernel.name()
            )));
        }
        Ok(Self { kernel, setup })
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    fn check_points(&self, points: &[Vec<f64>]) -> Result<()> {
        let expected = match &self.setup {
            Some(setup) if self.kernel.is_photonic() => setup.mesh.data_dim(),
            _ => points.first().map_or(0, Vec::len),
        };
        for p in points {
            if p.len() != expected {
                return Err(Error::DimensionMismatch {
                    expected,
                    found: p.len(),
                });
            }
        }
        Ok(())
    }

    fn unitaries(&self, points: &[Vec<f64>], exec: Execution) -> Result<Vec<MeshUnitary>> {
        let setup = self.setup.as_ref().expect("photonic evaluator has a setup");
        exec.try_map(points.len(), |i| unitary_for_point(&setup.mesh, &points[i]))
    }

    fn photonic_entry(
        &self,
        ui: &MeshUnitary,
        uj: &MeshUnitary,
        engine: Engine,
        seed_parts: [u64; 3],
    ) -> Result<f64> {
        let setup = self.setup.as_ref().expect("photonic evaluator has a setup");
        let psi = &setup.psi;
        let w = ui.adjoint().compose(uj);
        let model = self.kernel.distinguishability().expect("photonic kernel");
        let id = (seed_parts[1] as usize, seed_parts[2] as usize);
        match (self.kernel, engine) {
            (Kernel::Unbunching, Engine::Exact) => {
                unbunching_kernel_entry(&full_distribution(&w, psi, model)?, psi)
            }
            (Kernel::Unbunching, Engine::Sampled { shots, seed }) => {
                let dist = full_distribution(&w, psi, model)?;
                let record = sample_counts(&dist, shots, derive_seed(seed, &seed_parts), id)?;
                estimate_kernel_entry(&record, psi)
            }
            (_, Engine::Exact) => transition_probability(&w, psi, psi, model),
            (_, Engine::Sampled { shots, seed }) => {
                let dist = full_distribution(&w, psi, model)?;
                let record = sample_counts(&dist, shots, derive_seed(seed, &seed_parts), id)?;
                record.full_space_estimate(psi)
            }
        }
    }

    /// Symmetric `N×N` Gram matrix: the upper triangle is evaluated and
    /// mirrored. Photonic diagonals are set to one without evaluation.
    /// Classical kernels ignore the engine and are always exact.
    pub fn gram(&self, points: &[Vec<f64>], engine: Engine, exec: Execution) -> Result<GramMatrix> {
        self.check_points(points)?;
        check_engine(engine)?;
        let n = points.len();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        let mut values = DMatrix::zeros(n, n);
        let provenance;
        if self.kernel.is_photonic() {
            let us = self.unitaries(points, exec)?;
            let entries = exec.try_map(pairs.len(), |p| {
                let (i, j) = pairs[p];
                self.photonic_entry(&us[i], &us[j], engine, [SQUARE_STREAM, i as u64, j as u64])
            })?;
            for (&(i, j), v) in pairs.iter().zip(entries) {
                values[(i, j)] = v;
                values[(j, i)] = v;
            }
            for i in 0..n {
                values[(i, i)] = 1.0;
            }
            provenance = engine;
        } else {
            let entries = exec.try_map(pairs.len(), |p| {
                let (i, j) = pairs[p];
                classical_entry(&self.kernel, &points[i], &points[j])
            })?;
            for (&(i, j), v) in pairs.iter().zip(entries) {
                values[(i, j)] = v;
                values[(j, i)] = v;
            }
            let diag = exec.try_map(n, |i| classical_entry(&self.kernel, &points[i], &points[i]))?;
            for (i, v) in diag.into_iter().enumerate() {
                values[(i, i)] = v;
            }
            provenance = Engine::Exact;
        }
        Ok(GramMatrix {
            values,
            kernel: self.kernel,
            provenance,
        })
    }

    /// Rectangular matrix `K(rows[a], cols[b])`; photonic entries use the
    /// circuit `U(rows[a])†U(cols[b])`.
    pub fn cross_gram(
        &self,
        rows: &[Vec<f64>],
        cols: &[Vec<f64>],
        engine: Engine,
        exec: Execution,
    ) -> Result<GramMatrix> {
        self.check_points(rows)?;
        self.check_points(cols)?;
        if let (Some(r), Some(c)) = (rows.first(), cols.first()) {
            if r.len() != c.len() {
                return Err(Error::DimensionMismatch {
                    expected: c.len(),
                    found: r.len(),
                });
            }
        }
        check_engine(engine)?;
        let (nr, nc) = (rows.len(), cols.len());
        let entries;
        let provenance;
        if self.kernel.is_photonic() {
            let ur = self.unitaries(rows, exec)?;
            let uc = self.unitaries(cols, exec)?;
            entries = exec.try_map(nr * nc, |p| {
                let (a, b) = (p / nc, p % nc);
                self.photonic_entry(&ur[a], &uc[b], engine, [CROSS_STREAM, a as u64, b as u64])
            })?;
            provenance = engine;
        } else {
            entries = exec.try_map(nr * nc, |p| {
                classical_entry(&self.kernel, &rows[p / nc], &cols[p % nc])
            })?;
            provenance = Engine::Exact;
        }
        Ok(GramMatrix {
            values: DMatrix::from_row_slice(nr, nc, &entries),
            kernel: self.kernel,
            provenance,
        })
    }
}

impl Evaluator {
    /// Coincidence records behind a sampled square Gram, one per upper
    /// triangle pair, with the exact distribution they were drawn from.
    /// Seeds match [`Evaluator::gram`], so the counts are the ones the Gram
    /// entries were estimated from.
    pub fn coincidence_records(
        &self,
        points: &[Vec<f64>],
        shots: u64,
        seed: u64,
        exec: Execution,
    ) -> Result<Vec<(CoincidenceRecord, OutputDistribution)>> {
        if !self.kernel.is_photonic() {
            return Err(Error::Unsupported(format!("{} kernel has no photon counts", self.kernel.name())));
        }
        self.check_points(points)?;
        check_engine(Engine::Sampled { shots, seed })?;
        let setup = self.setup.as_ref().expect("photonic evaluator has a setup");
        let model = self.kernel.distinguishability().expect("photonic kernel");
        let n = points.len();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        let us = self.unitaries(points, exec)?;
        exec.try_map(pairs.len(), |p| {
            let (i, j) = pairs[p];
            let w = us[i].adjoint().compose(&us[j]);
            let dist = full_distribution(&w, &setup.psi, model)?;
            let entry_seed = derive_seed(seed, &[SQUARE_STREAM, i as u64, j as u64]);
            let record = sample_counts(&dist, shots, entry_seed, (i, j))?;
            Ok((record, dist))
        })
    }
}

fn check_engine(engine: Engine) -> Result<()> {
    if let Engine::Sampled { shots: 0, .. } = engine {
        return Err(Error::InvalidConfig("sampled engine requires shots > 0".into()));
    }
    Ok(())
}

/// Gram matrix of `points` under `kernel`.
pub fn gram_matrix(
    points: &[Vec<f64>],
    kernel: Kernel,
    setup: Option<&PhotonicSetup>,
    engine: Engine,
    exec: Execution,
) -> Result<GramMatrix> {
    Evaluator::new(kernel, setup.cloned())?.gram(points, engine, exec)
}
