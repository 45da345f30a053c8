use thiserror::Error;

use crate::space::ValidationReport;

/// Errors produced by the library and mapped onto CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("exponent p = {p} must lie in (0, {q}]")]
    Exponent { p: f64, q: f64 },

    #[error("not a valid {q}-metric: {}", .report.summary())]
    InvalidMetric { q: f64, report: ValidationReport },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_) | Error::Exponent { .. } | Error::Json(_) => 1,
            Error::InvalidMetric { .. } | Error::Precondition(_) => 2,
            Error::Capacity(_) | Error::Io(_) | Error::Csv(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Checks `0 < p <= q <= 1`.
pub(crate) fn check_exponent(p: f64, q: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 && p <= q && q <= 1.0 {
        Ok(())
    } else {
        Err(Error::Exponent { p, q })
    }
}
