use thiserror::Error;

pub type Result<T, E = DppcError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum DppcError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("numerical rank {available} is below the requested {needed} samples; raise the feature count r or lower the bandwidth s")]
    RankDeficient { needed: usize, available: usize },

    #[error("numerical degeneracy: {0}")]
    NumericalDegeneracy(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("eigendecomposition did not converge")]
    NonConvergence,

    #[error("problem too large for exhaustive enumeration: n = {n} (max {max})")]
    TooLarge { n: usize, max: usize },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// Coarse classification used for process exit codes and C error codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Numerical,
    Io,
}

impl DppcError {
    pub fn class(&self) -> ErrorClass {
        match self {
            DppcError::InvalidParameter(_)
            | DppcError::DimensionMismatch { .. }
            | DppcError::TooLarge { .. }
            | DppcError::Config(_) => ErrorClass::Config,
            DppcError::RankDeficient { .. }
            | DppcError::NumericalDegeneracy(_)
            | DppcError::DegenerateData(_)
            | DppcError::NonConvergence => ErrorClass::Numerical,
            DppcError::Parse { .. } | DppcError::Io(_) => ErrorClass::Io,
        }
    }

    /// Process exit code: 2 config, 3 numerical degeneracy, 4 IO.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Config => 2,
            ErrorClass::Numerical => 3,
            ErrorClass::Io => 4,
        }
    }

    pub(crate) fn param(msg: impl Into<String>) -> Self {
        DppcError::InvalidParameter(msg.into())
    }
}
