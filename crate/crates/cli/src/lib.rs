//! Configuration-driven frontend for `cocycle-core`.

pub mod commands;
pub mod config;
pub mod report;

use cocycle_core::CocycleError;
use thiserror::Error;

pub use commands::{run_command, Command, Outcome};
pub use config::RunConfig;
pub use report::{ReportCheck, RunReport};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] CocycleError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
}
