use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symplectic (deviation {0:e})")]
    NotSymplectic(f64),
    #[error("matrix is not symmetric (relative deviation {0:e})")]
    NotSymmetric(f64),
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("unphysical state: {0}")]
    Unphysical(String),
    #[error("degenerate measurement: {0}")]
    Degenerate(String),
    #[error("symplectic eigenvalues could not be paired (mismatch {0:e})")]
    EigenPairing(f64),
    #[error("eigen solver failed to converge")]
    EigenFailure,
    #[error("entangling-cloner route is undefined at T = 1; use the purification route")]
    ClonerUndefined,
    #[error("channel decomposition is required for the loose trust model")]
    MissingDecomposition,
    #[error("{0} is not implemented")]
    NotImplemented(&'static str),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("not enough samples for {what}: need {needed}, got {got}")]
    InsufficientData { what: &'static str, needed: usize, got: usize },
    #[error("estimated excess noise {xi:.6} is below zero by more than 3 standard errors ({se:.6})")]
    NegativeExcessNoise { xi: f64, se: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
