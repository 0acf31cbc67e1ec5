use std::fmt;

/// Failure of a CLI run, carrying its exit status class.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config files or flag combinations.
    Usage(String),
    /// A usage error clap has already printed.
    Reported,
    Core(detext_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Reported => 1,
            CliError::Core(e) if e.is_io_class() => 3,
            CliError::Core(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Reported => f.write_str("usage error"),
            CliError::Core(e) => e.fmt(f),
        }
    }
}

impl From<detext_core::Error> for CliError {
    fn from(e: detext_core::Error) -> Self {
        CliError::Core(e)
    }
}
