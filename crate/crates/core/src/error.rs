use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed or out-of-range input data. `row` is 1-based and counts the header.
    #[error("data error{}: {message}", location(*row, column.as_deref()))]
    Data {
        message: String,
        row: Option<usize>,
        column: Option<String>,
    },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("numeric error in layer {layer}: {message}")]
    Numeric { layer: usize, message: String },

    #[error("strategy error: {0}")]
    Strategy(String),

    #[error("evaluation error: {0}")]
    Eval(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("{strategy}: task {task}, epoch {epoch}, batch {batch}: {source}")]
    Run {
        strategy: String,
        task: usize,
        epoch: usize,
        batch: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn location(row: Option<usize>, column: Option<&str>) -> String {
    match (row, column) {
        (Some(r), Some(c)) => format!(" at row {r}, column `{c}`"),
        (Some(r), None) => format!(" at row {r}"),
        (None, Some(c)) => format!(" in column `{c}`"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub fn data(message: impl Into<String>) -> Self {
        Error::Data {
            message: message.into(),
            row: None,
            column: None,
        }
    }

    pub fn data_at(message: impl Into<String>, row: usize, column: Option<&str>) -> Self {
        Error::Data {
            message: message.into(),
            row: Some(row),
            column: column.map(str::to_owned),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Innermost error, looking through run-context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Run { source, .. } => source.root(),
            other => other,
        }
    }

    /// Process exit code for the command-line harness.
    ///
    /// 2 covers configuration, data and I/O problems, 3 numeric failures.
    /// Anything else that escapes a run is reported as 1.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config(_) | Error::Data { .. } | Error::Io { .. } => 2,
            Error::Numeric { .. } => 3,
            _ => 1,
        }
    }
}
