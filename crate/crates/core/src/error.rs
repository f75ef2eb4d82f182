use thiserror::Error;

use crate::topology::{FlowId, LinkId, NodeId};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Probability mass went negative or vanished.
    #[error("numeric corruption: {0}")]
    NumericCorruption(String),

    #[error("disconnected topology: transmission range {tx_range} m is below grid spacing {spacing} m")]
    DisconnectedTopology { tx_range: f64, spacing: f64 },

    #[error("unknown node {0}")]
    UnknownNode(NodeId),

    #[error("unknown link {0}")]
    UnknownLink(LinkId),

    #[error("no route for flow {flow} from node {src} to node {dst}")]
    NoRoute { flow: FlowId, src: NodeId, dst: NodeId },

    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("joint action space has {size:.3e} assignments, limit is {limit}")]
    OracleTooLarge { size: f64, limit: u64 },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: message.into() }
    }
}
