//! Error type shared across the crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Viterbi decoding found no path with nonzero probability.
    #[error("decode failure: {0}")]
    DecodeFailure(String),

    /// A file could not be parsed. `offset` is the byte offset of the
    /// first offending character when known.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// Parsed data violated a structural invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A goal observation set has no clone states in the model.
    #[error("no goal state: {0}")]
    NoGoalState(String),

    /// Pruning removed every state.
    #[error("empty model: {0}")]
    EmptyModel(String),

    /// The greedy planner found no path within the length budget.
    #[error("plan failure: {0}")]
    PlanFailure(String),

    /// Inconsistent or out-of-range configuration.
    #[error("config error: {0}")]
    Config(String),

    /// A grid layout file violated environment invariants.
    #[error("layout error: {0}")]
    Layout(String),

    /// A statistical test could not be computed for the given samples.
    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
