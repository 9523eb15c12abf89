use thiserror::Error;

/// Errors raised by graph loading, oracles, samplers and estimators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("{0}")]
    Domain(String),

    #[error("node index {index} out of range for graph with {n} nodes")]
    Index { index: usize, n: usize },

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("invalid sketch file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
