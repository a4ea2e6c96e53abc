//! Error type shared by the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain an operation is defined on
    /// (e.g. a pull index past the horizon, an exponent outside (0,1]).
    #[error("domain error: {0}")]
    Domain(String),

    /// A curve or instance was constructed with illegal parameters.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// A file parsed as JSON but does not describe a valid artifact
    /// (wrong arm count, mismatched horizons, weights not summing to one, ...).
    #[error("schema error: {0}")]
    Schema(String),

    /// Malformed JSON. Carries serde's line/column information.
    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
