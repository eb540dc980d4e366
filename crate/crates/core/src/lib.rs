//! Simulation and learning toolkit for two-boson photonic kernels.
//!
//! Data points in `[0,1]^d` are encoded as phases of a rectangular MZI mesh
//! ([`mesh`]); pairwise overlaps `|⟨ψ|U(x_i)†U(x_j)|ψ⟩|²` are computed from
//! matrix permanents ([`fock`]) or estimated from simulated coincidence counts
//! ([`shots`]); Gram matrices for photonic and classical kernels ([`kernels`])
//! feed a precomputed-kernel SVM ([`svm`]) on tasks labelled by the geometric
//! difference between the quantum and coherent kernels ([`taskgen`]). The
//! [`experiment`] module wires these together into reproducible runs.

pub mod error;
pub mod experiment;
pub mod fock;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod mesh;
pub mod par;
pub mod shots;
pub mod svm;
pub mod taskgen;

pub use error::{Error, Result};
pub use fock::{DistinguishabilityModel, FockState, OutputDistribution};
pub use kernels::{Engine, GramMatrix, Kernel};
pub use mesh::{MeshConfig, MeshUnitary, PhaseVector};
pub use par::Execution;
pub use svm::SvmModel;
pub use taskgen::{Dataset, GeometricDifferenceResult};
