use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("truncation dimension must be at least 2, got {0}")]
    DimTooSmall(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("displacement |alpha| = {alpha} exceeds the safety bound {bound} for dim {dim}")]
    UnsafeDisplacement { alpha: f64, bound: f64, dim: usize },

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("invalid Fock levels: {0}")]
    InvalidLevels(String),

    #[error("coefficients are not normalized: |alpha|^2 + |beta|^2 = {0}")]
    NotNormalized(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular value decomposition did not converge")]
    SvdFailed,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
