//! Library side of the `cvqkd` command: config loading, the sub-commands and
//! their report types.

pub mod commands;
pub mod config;

use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ABORT: i32 = 3;
pub const EXIT_CALIBRATION: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] cvqkd_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        use cvqkd_core::Error as E;
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(E::InvalidParameter { .. } | E::MissingDecomposition | E::ClonerUndefined | E::NotImplemented(_)) => EXIT_CONFIG,
            CliError::Core(E::Calibration(_) | E::NegativeExcessNoise { .. }) => EXIT_CALIBRATION,
            _ => EXIT_OTHER,
        }
    }
}
