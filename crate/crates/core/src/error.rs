//! Crate-wide error type.

/// Errors surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed input text (edge lists, model files), with a line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// A caller violated an operation's preconditions.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The objective returned a non-finite value during minimization.
    #[error("objective evaluated to a non-finite value at {point:?}")]
    Evaluation { point: Vec<f64> },

    /// Landmark bootstrap could not run, e.g. landmarks in different
    /// components.
    #[error("bootstrap error: {0}")]
    Bootstrap(String),

    /// A binary or textual artifact did not match its expected format.
    #[error("format error: {0}")]
    Format(String),

    /// A distance/path query on a node the embedding does not cover.
    #[error("query error: {0}")]
    Query(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
