use std::fmt;

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Malformed input: exit 2.
    Parse(String),
    /// Numerical failure inside a computation: exit 1.
    Numeric(conic_moduli::Error),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "invalid input: {m}"),
            CliError::Numeric(e) => write!(f, "numerical failure: {e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<conic_moduli::Error> for CliError {
    fn from(e: conic_moduli::Error) -> Self {
        match e {
            conic_moduli::Error::Argument(m) => CliError::Parse(m),
            other => CliError::Numeric(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
