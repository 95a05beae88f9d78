use std::path::PathBuf;

use thiserror::Error;

/// Failures surfaced by the command-line tool, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("{path}: line {line}, column `{column}`: {message}")]
    Schema {
        path: PathBuf,
        line: u64,
        column: String,
        message: String,
    },
    #[error("{path}: {message}")]
    Dataset { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("sampler initialization failed: {0}")]
    Initialization(String),
    #[error("study incomplete: {failed} of {total} runs failed in at least one cell")]
    StudyInvalid { failed: usize, total: usize },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(magfold_core::Error),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Schema { .. } | AppError::Dataset { .. } | AppError::Config(_) | AppError::Scenario(_) => 2,
            AppError::Initialization(_) => 3,
            AppError::StudyInvalid { .. } => 4,
            AppError::Io { .. } => 1,
            AppError::Core(e) => match e {
                magfold_core::Error::Initialization { .. } => 3,
                _ => 2,
            },
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        AppError::Io {
            context: context.into(),
            source,
        }
    }
}

impl From<magfold_core::Error> for AppError {
    fn from(e: magfold_core::Error) -> Self {
        match e {
            magfold_core::Error::Initialization { attempts } => {
                AppError::Initialization(format!("no finite starting point after {attempts} attempts"))
            }
            other => AppError::Core(other),
        }
    }
}

pub type AppResult<T> = Result<T, AppError>;
