use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("moment label `{label}`: {msg}")]
    Label { label: String, msg: String },

    /// A reduction or symbolic evaluation produced terms outside the moment basis.
    #[error("moment equations do not close: {0}")]
    NonClosure(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Weyr characteristic stopped being non-increasing at power `k`.
    #[error("rank sequence breakdown at power {k}: {msg}")]
    RankBreakdown { k: usize, msg: String },

    #[error("boundary-layer population {population:.3e} exceeds {tol:.1e} at t = {t}; increase the Fock cutoff")]
    Leakage { t: f64, population: f64, tol: f64 },

    #[error("{what} drift {value:.3e} exceeds {tol:.1e} at t = {t}")]
    Drift {
        what: &'static str,
        t: f64,
        value: f64,
        tol: f64,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
