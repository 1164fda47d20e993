use std::fmt;

use dgeom_core::Error;

/// Process exit status of the `dgeom` binary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    VerificationFailed = 1,
    Usage = 2,
    Parse = 3,
    Numeric = 4,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub exit: Exit,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            exit: Exit::Usage,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        CliError {
            exit: Exit::Numeric,
            message: message.into(),
        }
    }

    /// Wraps a library error raised while reading `what`. Expression syntax
    /// problems map to the parse status, everything else to the usage status.
    pub fn from_core(what: &str, err: Error) -> Self {
        let exit = match err {
            Error::Parse { .. } | Error::UnknownSymbol(_) | Error::Arity { .. } => Exit::Parse,
            _ => Exit::Usage,
        };
        CliError {
            exit,
            message: format!("{what}: {err}"),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Adds context to library results.
pub trait Context<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T>;
}

impl<T> Context<T> for dgeom_core::Result<T> {
    fn context(self, what: impl FnOnce() -> String) -> CliResult<T> {
        self.map_err(|e| CliError::from_core(&what(), e))
    }
}
