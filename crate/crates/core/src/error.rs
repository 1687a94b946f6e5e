use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("feature matrix has no rows or no columns")]
    EmptyFeatures,

    #[error("every target is IGNORE; nothing to train on")]
    AllIgnored,

    #[error("non-finite target at row {row}")]
    NonFiniteTarget { row: usize },

    #[error("{targets} targets supplied for {rows} rows")]
    TargetLength { targets: usize, rows: usize },

    #[error("target kind does not fit objective: {0}")]
    TargetKind(String),

    #[error("class {class} at row {row} is out of range for {num_classes} classes")]
    InvalidClass {
        row: usize,
        class: usize,
        num_classes: usize,
    },

    #[error("class {class} never occurs among non-IGNORE targets; its weight is undefined")]
    AbsentClass { class: usize },

    #[error("feature columns do not match: {0}")]
    ColumnMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("leaf {leaf} has no training rows")]
    EmptyLeaf { leaf: usize },

    #[error("malformed payload: {0}")]
    Malformed(String),

    #[error("unsupported format version {found}, this build reads version {expected}")]
    Version { found: u16, expected: u16 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("missing time context: {0}")]
    MissingContext(String),

    #[error("feature layout mismatch: {0}")]
    Layout(String),

    #[error("{}:{line}: {message}", file.display())]
    Ingest {
        file: PathBuf,
        line: u64,
        message: String,
    },

    #[error("graph has {count} violation(s); first: {first}")]
    InvalidGraph { count: usize, first: String },

    #[error("dataset spans {weeks} whole week(s); need more than {requested} for validation")]
    InsufficientSpan { weeks: usize, requested: usize },

    #[error("configuration: {0}")]
    Config(String),

    #[error("bundle was trained with config digest {bundle}, current config digest is {config}")]
    DigestMismatch { bundle: String, config: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable, machine-parseable class name used by the CLI on failure.
    pub fn class(&self) -> &'static str {
        match self {
            Error::EmptyFeatures
            | Error::AllIgnored
            | Error::NonFiniteTarget { .. }
            | Error::TargetLength { .. }
            | Error::TargetKind(_)
            | Error::InvalidClass { .. }
            | Error::AbsentClass { .. }
            | Error::EmptyLeaf { .. } => "training",
            Error::ColumnMismatch(_) | Error::Shape(_) | Error::Layout(_) => "shape",
            Error::InvalidParams(_) | Error::Config(_) => "config",
            Error::Malformed(_) | Error::Version { .. } => "format",
            Error::EmptyInput(_) | Error::MissingContext(_) => "input",
            Error::Ingest { .. } | Error::InvalidGraph { .. } => "ingest",
            Error::InsufficientSpan { .. } => "split",
            Error::DigestMismatch { .. } => "digest",
            Error::Io { .. } => "io",
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
