//! Error type of the command line layer.
//!
//! Every failure is sorted into one of three kinds that map directly onto
//! exit codes: `usage` (1) for bad invocations and unparseable or invalid
//! configuration, `runtime` (2) for failures while computing or writing, and
//! `partial` (3) for sweeps that finished with some failed grid points. The
//! binary prints errors as a single JSON line on stderr so scripts can parse
//! them without scraping prose.

use std::fmt;

use vortex_core::VortexError;

/// A command line failure with its exit-code class.
#[derive(Debug, Clone)]
pub enum CliError {
    /// Bad invocation or invalid configuration; exit code 1.
    Usage(String),
    /// Failure during computation or output; exit code 2.
    Runtime(String),
    /// A sweep completed with some failed rows; exit code 3.
    Partial(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn usage(message: impl fmt::Display) -> Self {
        CliError::Usage(message.to_string())
    }

    pub fn runtime(message: impl fmt::Display) -> Self {
        CliError::Runtime(message.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
            CliError::Partial(_) => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Runtime(_) => "runtime",
            CliError::Partial(_) => "partial",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) | CliError::Partial(m) => m,
        }
    }

    /// The stderr form: one JSON line.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": { "kind": self.kind(), "message": self.message() }
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind(), self.message())
    }
}

impl std::error::Error for CliError {}

impl From<VortexError> for CliError {
    fn from(err: VortexError) -> Self {
        CliError::Runtime(err.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Runtime(format!("io: {err}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(err: serde_json::Error) -> Self {
        CliError::Runtime(format!("json: {err}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        CliError::Runtime(format!("csv: {err}"))
    }
}
