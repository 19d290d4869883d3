//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("node {node:?} has no attributes")]
    MissingAttributes { node: String },

    #[error("unknown edge type {edge_type:?}")]
    UnknownEdgeType { edge_type: String },

    #[error("model has {count} encoder pairs; an explicit edge type is required")]
    AmbiguousEdgeType { count: usize },

    #[error("non-finite gradient in tensor {tensor:?}; update not applied")]
    NonFiniteGradient { tensor: String },

    #[error("no test node has a held-out neighbor; nothing to evaluate")]
    NoEligibleTestNodes,

    #[error("not a checkpoint file (bad magic)")]
    CheckpointMagic,

    #[error("unsupported checkpoint version {found} (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error("truncated checkpoint file")]
    CheckpointTruncated,

    #[error("checkpoint checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    CheckpointChecksum { stored: u32, computed: u32 },

    #[error("malformed checkpoint: {0}")]
    CheckpointFormat(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
