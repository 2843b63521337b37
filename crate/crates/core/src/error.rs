//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Structurally malformed input: mismatched lengths, duplicate ids,
    /// non-finite values, missing feature columns.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration value outside its valid domain.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// A linear system that stayed rank-deficient even after diagonal
    /// regularization.
    #[error("ill-conditioned system ({context}); condition estimate {condition:.3e}")]
    IllConditioned { context: String, condition: f64 },

    /// The exhaustive grid oracle was asked for a problem it cannot afford.
    #[error("grid oracle refused: {0}")]
    OracleRefused(String),

    /// One replicate of an experiment sweep failed; carries enough context to
    /// reproduce it in isolation.
    #[error("replicate {replicate} of sweep point {point} (seed {seed}) failed: {source}")]
    Replicate {
        point: String,
        replicate: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    /// A should-never-happen internal invariant violation.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
