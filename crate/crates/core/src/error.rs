use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("singular input: {0}")]
    SingularInput(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Optimizer gave up. Carries the last iterate and its residual norm.
    #[error("fit failed: {message} (residual norm {residual_norm:.3e})")]
    FitFailure {
        message: String,
        last_params: Vec<f64>,
        residual_norm: f64,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for failures of the numerics rather than of the caller's input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Numerical(_) | Error::FitFailure { .. } | Error::InsufficientData(_)
        )
    }
}
