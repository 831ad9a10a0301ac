use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// A single broken configuration invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("override `{0}` is not of the form key=value")]
    BadOverride(String),
    #[error("invalid value for `{key}`: {message}")]
    Value { key: String, message: String },
    #[error("invalid configuration:\n{}", list(.0))]
    Invalid(Vec<Violation>),
    #[error("invalid sweep: {0}")]
    Sweep(String),
    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

fn list(v: &[Violation]) -> String {
    v.iter()
        .map(|x| format!("  - {x}"))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Failures while persisting or reading results.
#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{}: missing column: {column}", path.display())]
    MissingColumn { path: PathBuf, column: String },
    #[error("{}: line {line}: bad value `{value}` in column {column}", path.display())]
    BadValue {
        path: PathBuf,
        line: u64,
        column: String,
        value: String,
    },
    #[error("no rows to write")]
    Empty,
}

impl OutputError {
    /// Whether the input did not match the documented CSV schema.
    pub fn is_schema(&self) -> bool {
        matches!(self, OutputError::MissingColumn { .. } | OutputError::BadValue { .. })
    }
}
