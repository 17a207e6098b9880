//! Error categories mapped to distinct process exit codes.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad or missing configuration. Exit code 2.
    Config(String),
    /// Missing, unreadable, or stale input data. Exit code 3.
    Input(String),
    /// A pipeline stage failed on valid inputs. Exit code 4.
    Stage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Input(_) => 3,
            CliError::Stage(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Input(msg) => write!(f, "input error: {msg}"),
            CliError::Stage(msg) => write!(f, "stage error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type Result<T> = std::result::Result<T, CliError>;
