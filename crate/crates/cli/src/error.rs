use std::path::PathBuf;

use ks_core::KsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("missing required key `{0}`")]
    MissingKey(&'static str),

    #[error("invalid value for `{key}`: {reason}")]
    InvalidValue { key: &'static str, reason: String },

    #[error("referenced file {} does not exist", .0.display())]
    MissingFile(PathBuf),

    #[error(transparent)]
    InvalidParameter(#[from] KsError),
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),

    #[error("empty sweep: give at least one sample")]
    EmptySweep,

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("solver error ({}): {0}", .0.kind())]
    Solver(#[from] KsError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status: 2 for configuration problems, 3 for runtime
    /// failures (solver or filesystem).
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::EmptySweep => 2,
            CliError::Io { .. } | CliError::Solver(_) => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
