use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("relation group {group} ({text:?}): {message}")]
    Relation {
        group: usize,
        text: String,
        message: String,
    },

    #[error("line {line}: self-loop on {name:?} is not allowed")]
    SelfLoop { line: usize, name: String },

    #[error("unknown node {0:?}")]
    UnknownNode(String),

    #[error("no node has a matching degree >= 1")]
    EmptyDistribution,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate regression: {0}")]
    Degenerate(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("assignment does not cover {0}")]
    Coverage(String),

    #[error("graph has no edges to analyse")]
    EmptyGraph,

    #[error("cannot rewire a graph with {edges} dependency edge(s); need at least 2")]
    CannotRewire { edges: usize },

    #[error("sample set is empty")]
    EmptySamples,

    #[error("invalid installation state: {0}")]
    State(String),

    #[error("graph has no interacting packages")]
    NoInteractingNodes,

    #[error("ensemble member {index}: {source}")]
    Ensemble {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by unreadable or malformed input, as opposed to
    /// failures of the analysis itself.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Parse { .. }
            | Error::Relation { .. }
            | Error::SelfLoop { .. }
            | Error::Io { .. }
            | Error::Config(_) => true,
            Error::Ensemble { source, .. } => source.is_input_error(),
            _ => false,
        }
    }
}
