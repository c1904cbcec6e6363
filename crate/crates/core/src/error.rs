use thiserror::Error;

/// Errors raised by the laboratory. Findings about the mathematics (violated
/// inequalities, failed hypotheses) are never errors; they are report entries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("non-finite value ({what}) at point {point:?}")]
    Numeric { what: String, point: Vec<Vec<f64>> },

    #[error("calibration failed: {reason}; witness {witness:?}")]
    Calibration {
        reason: String,
        witness: Vec<Vec<f64>>,
    },
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
