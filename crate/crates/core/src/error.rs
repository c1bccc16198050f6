use std::io;

use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// The variants map onto the CLI exit-code classes: everything except
/// [`Error::Numerical`] is reported as an input/usage problem.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a mathematical function.
    #[error("domain error: {0}")]
    Domain(String),
    /// Malformed or insufficient input data.
    #[error("input error: {0}")]
    Input(String),
    /// Invalid settings (unknown labels, zero counts, ...).
    #[error("configuration error: {0}")]
    Config(String),
    /// An iterative computation broke down (degenerate weights, non-finite state).
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Rejects NaN/inf and non-positive values.
pub(crate) fn check_positive(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(domain(format!("{name} must be finite and > 0, got {x}")))
    }
}

pub(crate) fn check_finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(domain(format!("{name} must be finite, got {x}")))
    }
}
