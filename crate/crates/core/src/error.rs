use thiserror::Error;

/// Errors raised by the group, orbit, separation and frame layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is singular (|det| = {det:.3e} below threshold {threshold:.3e})")]
    Singular { det: f64, threshold: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("operation requires family {expected}, got {found}")]
    WrongFamily { expected: String, found: String },

    #[error("lattice window would produce {requested} elements (cap {cap})")]
    WindowOverflow { requested: u128, cap: usize },

    #[error("lattice is empty")]
    EmptyLattice,

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("matrix is not symmetric (max deviation {0:.3e})")]
    Asymmetric(f64),

    #[error("probe window is not inside the orbit: sample {point:?} is {status}")]
    ProbeOutsideOrbit { point: Vec<f64>, status: String },

    #[error("no admissible epsilon found (largest tested {largest_tested:.3e}): {violation}")]
    EpsilonSearch { largest_tested: f64, violation: String },

    #[error("region F is not contained in region D")]
    NotContained,

    #[error("region has empty interior")]
    EmptyInterior,

    #[error("missing or unverified certificate: {0}")]
    MissingCertificate(String),

    #[error("index outside window: {0}")]
    IndexOutsideWindow(String),

    #[error("no convergence after {iterations} iterations (relative residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("admissibility integral diverges at omega = {omega:?} ({small:.6e} -> {large:.6e} under domain enlargement)")]
    DivergentIntegral { omega: Vec<f64>, small: f64, large: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("affine element is not compatible with the grid: {0}")]
    GridIncompatible(String),

    #[error("malformed data: {0}")]
    Malformed(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
