use thiserror::Error;

use crate::grid::SimplexRef;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A size guard of an oracle or exact solver was exceeded.
    #[error("{what} has size {size}, above the limit of {limit}")]
    GuardExceeded {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    /// Inputs that cannot be related to each other (different domains,
    /// stale assignments, mismatched infinite classes).
    #[error("structural mismatch: {0}")]
    Structural(String),

    #[error("{0} is not a saddle-saddle pair")]
    NotSaddlePair(SimplexRef),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
