use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: invalid UTF-8 at byte offset {offset}")]
    Malformed { offset: usize },

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("{}:{line}: {source}", path.display())]
    Shard {
        path: PathBuf,
        line: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("no such file or directory: {}", .0.display())]
    MissingPath(PathBuf),

    #[error("no shards (*.tsv.gz or *.tsv) found in {}", .0.display())]
    NoShards(PathBuf),

    #[error("data source {} contains no records", .0.display())]
    EmptySource(PathBuf),

    #[error("{operator}: record {ordinal}: {message}")]
    Operator {
        operator: &'static str,
        ordinal: u64,
        message: String,
    },

    #[error("invalid mix weights: {0}")]
    InvalidWeights(String),

    #[error("invalid pattern: {0}")]
    InvalidPattern(#[from] regex::Error),

    #[error("pipeline {0:?} is already registered")]
    DuplicatePipeline(String),

    #[error("unknown pipeline {name:?}; registered pipelines: {}", known.join(", "))]
    UnknownPipeline { name: String, known: Vec<String> },

    #[error("pipeline {pipeline:?} expects {expected} source(s), got {got}")]
    Arity {
        pipeline: String,
        expected: usize,
        got: usize,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("worker {worker}: {source}")]
    Worker {
        worker: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by how the tool was invoked rather than by the
    /// data it read. The command-line front end maps these to exit code 2.
    pub fn is_config(&self) -> bool {
        match self {
            Error::InvalidWeights(_)
            | Error::InvalidPattern(_)
            | Error::DuplicatePipeline(_)
            | Error::UnknownPipeline { .. }
            | Error::Arity { .. }
            | Error::Config(_)
            | Error::MissingPath(_)
            | Error::NoShards(_) => true,
            Error::Worker { source, .. } => source.is_config(),
            _ => false,
        }
    }
}
