use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("ingest: cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("ingest: parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("schema: {0}")]
    InvalidSchema(String),

    #[error("schema: label column must have exactly 2 categories, found {found}: {tokens:?}")]
    NonBinaryLabel { found: usize, tokens: Vec<String> },

    #[error("schema: unknown label token {0:?}")]
    UnknownLabel(String),

    #[error("entropy: cannot build a pool from zero rows ({0} class)")]
    EmptyPool(String),

    #[error("entropy: entropy of an empty distribution is undefined")]
    UndefinedEntropy,

    #[error("entropy: {0}")]
    InvalidCounts(String),

    #[error("classifier: unfittable, class {class} ({token:?}) has no training rows")]
    Unfittable { class: String, token: String },

    #[error("eval: {0}")]
    EmptyEvaluation(String),

    #[error("model: {0}")]
    ModelFormat(String),

    #[error("model: file format version {found} is not supported (this build reads version {supported})")]
    ModelVersion { found: u64, supported: u64 },

    #[error("model: cannot access {path}: {source}")]
    ModelIo {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("usage: {0}")]
    Usage(String),
}
