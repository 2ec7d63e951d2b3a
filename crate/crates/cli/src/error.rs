use std::fmt;

/// Exit statuses: 2 usage, 3 optimization failure, 4 capacity, 1 anything else.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Optimization(String),
    Capacity(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Optimization(_) => 3,
            CliError::Capacity(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Optimization(m) => write!(f, "optimization failed: {m}"),
            CliError::Capacity(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "{m}"),
        }
    }
}

impl From<spinvqe::Error> for CliError {
    fn from(e: spinvqe::Error) -> Self {
        use spinvqe::Error;
        match e {
            Error::Capacity(_) => CliError::Capacity(e.to_string()),
            Error::NonFiniteCost { .. } | Error::Convergence { .. } => CliError::Optimization(e.to_string()),
            Error::InvalidArgument(_) | Error::StateInvariant(_) | Error::Undefined(_) => CliError::Usage(e.to_string()),
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

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T = ()> = Result<T, CliError>;
