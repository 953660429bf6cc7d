use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("symbol `{0}` has zero probability; use a positive smoothing value")]
    ZeroProbability(String),

    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),

    #[error("episode is not acyclic")]
    Cyclic,

    #[error("episode has {0} nodes, more than the supported {1}")]
    TooManyNodes(usize, usize),

    #[error("node {0} is not a sink")]
    NotASink(usize),

    #[error("machine for episode {episode} exceeds the state cap of {cap}")]
    StateCap { episode: String, cap: usize },

    #[error("moment recursion does not converge at state {state} (r = {r})")]
    Divergent { state: usize, r: f64 },

    #[error("negative variance {0}")]
    NegativeVariance(f64),

    #[error("guard exceeded: {0}")]
    Guard(String),

    #[error("not enough room to plant the requested occurrences")]
    NoRoom,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
