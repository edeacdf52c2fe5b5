use thiserror::Error;

/// Errors raised by the construction and certification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("party index {index} out of range for {parties} parties")]
    IndexOutOfRange { index: usize, parties: usize },

    #[error("dimension {dim} exceeds the configured size cap {cap}")]
    SizeCapExceeded { dim: usize, cap: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("random POVM whitening stayed singular after {0} attempts")]
    SingularWhitening(usize),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
