use std::fmt;

/// Errors raised anywhere in the simulator, kernel and learning pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("component {index} = {value} lies outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },

    #[error("phase {index} = {value} lies outside [0, 2π)")]
    PhaseOutOfRange { index: usize, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("photon number mismatch: input has {input}, output has {output}")]
    PhotonNumberMismatch { input: usize, output: usize },

    #[error("probability {0:e} outside [0, 1] beyond rounding tolerance")]
    InvalidProbability(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("matrix is singular: {0}")]
    Singular(String),

    #[error("negative eigenvalue {0:e} below tolerance; matrix is not positive semidefinite")]
    NegativeEigenvalue(f64),

    #[error("solver did not converge after {iterations} iterations (KKT gap {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("no post-selected counts recorded; increase the shot budget")]
    InsufficientShots,

    #[error("distribution not normalized (sum {0})")]
    NotNormalized(f64),

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn context(self, context: impl fmt::Display) -> Self {
        Error::Context {
            context: context.to_string(),
            source: Box::new(self),
        }
    }
}
