use std::fmt;

use aiin_core::Error;

/// Failure classes of the command surface, each with its own exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or arguments (exit 1).
    Usage(String),
    /// Unreadable or malformed input, failed writes (exit 2).
    Data(String),
    /// Numerical breakdown: non-PSD covariance, divergence, ... (exit 3).
    Numeric(String),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    /// Classifies a library error, prefixing `context` (file or stage).
    pub fn from_core(context: impl fmt::Display, e: Error) -> Self {
        let msg = format!("{context}: {e}");
        if e.is_numeric() {
            CliError::Numeric(msg)
        } else {
            CliError::Data(msg)
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Attaches context to core results.
pub(crate) trait Context<T> {
    fn context(self, what: impl fmt::Display) -> CliResult<T>;
}

impl<T> Context<T> for aiin_core::Result<T> {
    fn context(self, what: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| CliError::from_core(what, e))
    }
}

impl<T> Context<T> for std::io::Result<T> {
    fn context(self, what: impl fmt::Display) -> CliResult<T> {
        self.map_err(|e| CliError::Data(format!("{what}: {e}")))
    }
}
