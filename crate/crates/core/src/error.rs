use thiserror::Error;

/// Errors raised across the model, solver, estimation and I/O layers.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration value violates a schema constraint.
    #[error("invalid config at `{key}`: {constraint}")]
    Config { key: String, constraint: String },

    /// An enumeration would exceed its configured budget.
    #[error("enumeration budget exceeded: {required} candidates > budget {budget} ({what})")]
    Budget {
        what: &'static str,
        required: u128,
        budget: u128,
    },

    /// Ambiguous input, e.g. a tie where a unique maximiser is required.
    #[error("ambiguous: {0}")]
    Ambiguous(String),

    /// The requested operation would not change anything.
    #[error("no-op: {0}")]
    NoOp(String),

    /// Estimation could not proceed (too few clusters, empty design, ...).
    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            constraint: constraint.into(),
        }
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
