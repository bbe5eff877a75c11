use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{path}:{line}: self-loop on node {node}")]
    SelfLoop {
        path: PathBuf,
        line: usize,
        node: usize,
    },

    #[error("{0}: no edges or node count found")]
    EmptyGraph(PathBuf),

    #[error("node {node} out of range for graph with {num_nodes} nodes")]
    NodeOutOfRange { node: usize, num_nodes: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("view {view} has {dim} columns, fewer than rank {rank}")]
    RankTooLarge { view: usize, dim: usize, rank: usize },

    #[error("rank {rank} outside feasible range 1..={max}")]
    RankOutOfRange { rank: usize, max: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
