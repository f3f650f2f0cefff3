//! Error classes and their process exit codes.

use std::fmt;

use fracvar::FracError;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_SCHEMA: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    /// Invalid configuration, input or invariant violation.
    Config(String),
    /// A declared numerical budget or experiment verdict failed.
    Budget(String),
    /// Incompatible report or field schema.
    Schema(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Budget(_) => EXIT_BUDGET,
            CliError::Schema(_) => EXIT_SCHEMA,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Budget(m) => write!(f, "numerical budget: {m}"),
            CliError::Schema(m) => write!(f, "schema error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<FracError> for CliError {
    fn from(e: FracError) -> Self {
        match e {
            FracError::Budget(_) => CliError::Budget(e.to_string()),
            FracError::Schema { .. } => CliError::Schema(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("i/o: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(format!("json: {e}"))
    }
}
