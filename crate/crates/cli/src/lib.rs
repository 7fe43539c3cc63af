//! Command implementations behind the `gimag` binary.
//!
//! Every command returns its output as a string (or writes a file) and
//! reports failures through [`CliError`], whose variant fixes the exit code:
//! `1` for domain failures such as an invalid state or a violated property,
//! `2` for usage, file and parse errors.

pub mod commands;
pub mod fuzz;
pub mod io;
pub mod sweep;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Input was read and understood but is invalid.
    #[error("{0}")]
    Domain(String),
    /// A check ran and failed; the payload is the full report.
    #[error("{0}")]
    Failed(String),
    /// Bad flags, unreadable files, malformed JSON.
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) | CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
