//! The `founder` command-line tool.

pub mod args;
pub mod commands;
pub mod config;

use std::fmt;

pub use args::Cli;
pub use config::PipelineConfig;

/// Exit status for usage and input errors.
pub const EXIT_USAGE: i32 = 2;
/// Exit status for failures inside the pipeline.
pub const EXIT_FAILURE: i32 = 1;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self::usage(message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_FAILURE,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<founder_core::Error> for CliError {
    fn from(e: founder_core::Error) -> Self {
        CliError {
            code: if e.is_input_error() { EXIT_USAGE } else { EXIT_FAILURE },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::internal(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::internal(e.to_string())
    }
}
