use thiserror::Error;

/// Errors raised by the simulation, road, metric, and optimization routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter or input violates its documented invariant.
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    /// Two series that must share a time grid do not.
    #[error("time grid mismatch: {0}")]
    GridMismatch(String),

    /// A numerical routine produced or received non-finite values.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn ensure_finite(field: &'static str, values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid(field, "value is not finite"))
    }
}
