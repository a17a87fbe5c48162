use std::fmt;

/// CLI failure classes, mapped onto process exit codes:
/// configuration problems exit 2, solver failures exit 3, I/O problems 1.
#[derive(Debug)]
pub enum CliError {
    /// Invalid or inconsistent configuration, with field-level messages.
    Config(Vec<String>),
    Solver(lockdown_opt_core::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn config(field: &str, msg: impl Into<String>) -> Self {
        CliError::Config(vec![format!("{field}: {}", msg.into())])
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msgs) => {
                write!(f, "configuration error")?;
                for m in msgs {
                    write!(f, "\n  - {m}")?;
                }
                Ok(())
            }
            CliError::Solver(e) => write!(f, "solver failure: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<lockdown_opt_core::Error> for CliError {
    fn from(e: lockdown_opt_core::Error) -> Self {
        CliError::Solver(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl std::error::Error for CliError {}
