use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An input outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature ran out of refinement levels.
    #[error("quadrature did not converge after {levels} levels (last {last:e}, previous {previous:e})")]
    NonConvergence {
        levels: usize,
        last: f64,
        previous: f64,
    },

    /// Partial sums failed the Cauchy test against the tail bound.
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("invalid configuration field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
