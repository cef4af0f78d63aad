//! Support library for the `dirmod` binary: config files, presets, output
//! rendering, channel parsing, and the verification campaigns.

pub mod channel_io;
pub mod config;
pub mod output;
pub mod presets;
pub mod verify;

use std::fmt;

/// Process-level error classes; each maps to a documented exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid arguments, config files, or input data. Exit code 2.
    Config(String),
    /// The solver or simulation failed numerically. Exit code 3.
    Numerical(String),
    /// A verification campaign found a violation. Exit code 4.
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            CliError::Verification(msg) => write!(f, "verification failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}
