use std::fmt;
use std::path::{Path, PathBuf};

use nominal_uq::{Error, ErrorKind};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const IO: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const PARSE: u8 = 3;
    pub const VALIDATION: u8 = 4;
    pub const NUMERICAL: u8 = 5;
}

#[derive(Debug)]
pub enum CliError {
    Io { path: PathBuf, source: std::io::Error },
    Usage(String),
    Parse { path: PathBuf, line: Option<u64>, message: String },
    Lib { context: String, source: Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn parse(path: &Path, line: Option<u64>, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }

    pub fn lib(context: impl Into<String>, source: Error) -> Self {
        CliError::Lib {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => exit::IO,
            CliError::Usage(_) => exit::USAGE,
            CliError::Parse { .. } => exit::PARSE,
            CliError::Lib { source, .. } => match source.kind() {
                ErrorKind::Validation => exit::VALIDATION,
                ErrorKind::Numerical => exit::NUMERICAL,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Parse {
                path,
                line: Some(line),
                message,
            } => write!(f, "{}:{line}: {message}", path.display()),
            CliError::Parse {
                path,
                line: None,
                message,
            } => write!(f, "{}: {message}", path.display()),
            CliError::Lib { context, source } if context.is_empty() => write!(f, "{source}"),
            CliError::Lib { context, source } => write!(f, "{context}: {source}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(source: Error) -> Self {
        CliError::lib("", source)
    }
}

pub type CliResult<T> = Result<T, CliError>;
