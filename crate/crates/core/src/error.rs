use thiserror::Error;

/// Errors raised by the simulation toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("system too large: {what} (limit {limit})")]
    Capacity { what: String, limit: usize },

    #[error("numerical breakdown: {reason} (condition estimate {condition:.3e})")]
    NumericalBreakdown { reason: String, condition: f64 },

    #[error("state annihilated at period {period}: frame rank collapsed")]
    DegenerateEvolution { period: usize },

    #[error("correlation spectrum outside [-1, 1]: max |nu| = {max_abs_nu}")]
    PurityViolation { max_abs_nu: f64 },

    #[error("integration failed at t = {last_good_t}: {reason}")]
    IntegrationFailure { last_good_t: f64, reason: String },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("pole in metric: {0}")]
    Pole(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_) | Error::Unsupported(_) | Error::Capacity { .. } | Error::Pole(_)
        )
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::NumericalBreakdown { reason: e.to_string(), condition: f64::INFINITY }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
