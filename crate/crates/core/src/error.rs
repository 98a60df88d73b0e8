use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: expected {expected} columns, found {found}")]
    MalformedRow {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("line {line}: cannot parse timestamp {raw:?} with pattern {pattern:?}")]
    TimestampParse {
        line: u64,
        raw: String,
        pattern: String,
    },

    #[error("line {line}: activity label is empty")]
    EmptyActivity { line: u64 },

    #[error("line {line}: activity label {label:?} is reserved for the artificial start/end nodes")]
    ReservedLabel { line: u64, label: String },

    #[error("column {0:?} not found in the header")]
    MissingColumn(String),

    #[error("invalid column mapping: {0}")]
    InvalidMapping(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("xml error: {0}")]
    Xml(String),

    #[error("trace {case_index}: missing required key {key:?}")]
    MissingKey { case_index: usize, key: String },

    #[error("event log contains no events")]
    EmptyLog,

    #[error("case {case_id:?}: {reason}")]
    InvalidCase { case_id: String, reason: String },

    #[error("duplicate case id {0:?}")]
    DuplicateCase(String),

    #[error("invalid coverage fraction {0}; expected a value in (0, 1]")]
    InvalidFraction(f64),

    #[error("unknown activity {0:?}")]
    UnknownActivity(String),

    #[error("activity {0:?} has no {1} transitions")]
    ZeroTotal(String, &'static str),

    #[error("valid label set is empty")]
    EmptyValidSet,

    #[error("unknown or non-external criterion {0:?}")]
    UnknownCriterion(String),

    #[error("scorecard needs exactly one result per criterion: {0}")]
    IncompleteResults(String),

    #[error("all weights of scored criteria are zero")]
    AllWeightsZero,

    #[error("invalid weight {weight} for {criterion}")]
    InvalidWeight { criterion: String, weight: f64 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid synthetic spec field {field}: {reason}")]
    InvalidSpec { field: &'static str, reason: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }
}
