use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    /// `line` is the 1-based line in the file (the header is line 1),
    /// `column` the 1-based column.
    #[error("parse error at line {line}, column {column}: cannot read {value:?} as a number")]
    Parse {
        line: u64,
        column: usize,
        value: String,
    },

    #[error("label error: {0}")]
    Label(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("shape error: expected {expected} features, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("numeric failure at iteration {iteration}: {what}")]
    Numeric { iteration: usize, what: String },

    #[error("model format error: {0}")]
    Format(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the input data rather than the caller's
    /// configuration or a numeric breakdown.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Schema(_)
                | Error::Parse { .. }
                | Error::Label(_)
                | Error::Validation(_)
                | Error::Csv(_)
                | Error::Io { .. }
                | Error::Format(_)
        )
    }
}
