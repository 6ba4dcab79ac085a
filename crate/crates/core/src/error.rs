use thiserror::Error;

/// Errors raised by the solver toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("player {player}: strategy already present in the sampled game")]
    DuplicateStrategy { player: usize },

    #[error("player {player} has no feasible strategy: {reason}")]
    NoStrategy { player: usize, reason: String },

    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    #[error("linear solver failure: {0}")]
    SolverFailure(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("enumeration refused: {0}")]
    Refused(String),

    #[error("time limit reached")]
    TimeLimit,

    #[error("malformed instance: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
