use std::path::PathBuf;

/// Errors surfaced by the refinement library.
#[derive(Debug, thiserror::Error)]
pub enum RefineError {
    #[error("cannot open database {path}: {source}")]
    DatabaseOpen {
        path: PathBuf,
        #[source]
        source: rusqlite::Error,
    },

    #[error("database {path} contains no tables")]
    EmptySchema { path: PathBuf },

    #[error("unknown column {table}.{column}")]
    UnknownColumn { table: String, column: String },

    #[error("unknown table {0}")]
    UnknownTable(String),

    #[error("invalid identifier {0:?}")]
    InvalidIdentifier(String),

    #[error("rename {table}.{column} -> {new_name} is inadmissible: {reason}")]
    InadmissibleRename {
        table: String,
        column: String,
        new_name: String,
        reason: String,
    },

    #[error("statement is not read-only (first token {0:?})")]
    NotReadOnly(String),

    #[error("sql error: {0}")]
    Sql(#[from] rusqlite::Error),

    #[error("statement timed out after {0:?}")]
    Timeout(std::time::Duration),

    #[error("identifier {name:?} at byte {offset} resolves ambiguously: {detail}")]
    AmbiguousRewrite {
        name: String,
        offset: usize,
        detail: String,
    },

    #[error("workload file {path}: {reason}")]
    Workload { path: PathBuf, reason: String },

    #[error("no verifier models configured")]
    NoModels,

    #[error("mismatched query sets: {0}")]
    MismatchedQuerySets(String),

    #[error("brute-force instance too large: {0} assignments exceeds the 10^6 guard")]
    InstanceTooLarge(u128),

    #[error("view synthesis failed on statement {statement:?}: {source}")]
    ViewDdl {
        statement: String,
        #[source]
        source: rusqlite::Error,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("score log {path}: {reason}")]
    ScoreLog { path: PathBuf, reason: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, RefineError>;

impl RefineError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        RefineError::Io {
            path: path.into(),
            source,
        }
    }
}
