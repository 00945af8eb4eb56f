//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A tracker update produced NaN or Inf, which usually means the step
    /// size exceeds 1/L_f for this data.
    #[error("non-finite value in {context} at step {step} (step size too large?)")]
    NonFiniteValue { context: &'static str, step: usize },

    /// I - A is numerically singular; the generator is supposed to rescale
    /// A so this never fires on generated data.
    #[error("singular system: condition estimate {cond:.3e} exceeds 1e12")]
    SingularSystem { cond: f64 },

    #[error("degenerate data: moment matrices stay zero, cannot resolve a step size")]
    DegenerateData,

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("no sign pattern satisfies the optimality system (numerical degeneracy)")]
    NoConsistentPattern,

    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV: {0}")]
    Csv(String),

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
