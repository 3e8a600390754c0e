//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on a physical operation was violated (zero linewidth,
    /// empty input, angle out of range, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid configuration; `path` names the offending key.
    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    /// An internal contract between modules was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// The integrator could not continue (step-size underflow or a
    /// non-finite state component).
    #[error("integration failed at t = {t_fail:.9e} s: {msg}")]
    Integration { t_fail: f64, msg: String },

    /// A quantity that should be preserved by construction degraded beyond
    /// tolerance (e.g. Hermiticity of the correlation matrix).
    #[error("numerical degradation: {0}")]
    Numerics(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config { path: path.into(), msg: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
