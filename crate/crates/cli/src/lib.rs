//! Experiment runner for the additive-quadratic stability laboratory.
//!
//! A JSON config describes the spaces, the control function, the mapping,
//! the methods and the sample sets. [`pipeline::Experiment`] runs the
//! requested stages and returns an [`aqlab::AuditReport`] together with
//! CSV and JSON artifacts. Exit codes: 0 all pass, 1 any fail or flagged
//! finding, 2 refused checks, 3 configuration or I/O errors.

pub mod config;
pub mod output;
pub mod pipeline;
pub mod sampling;
pub mod sweep;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] aqlab::Error),
}

impl CliError {
    pub const EXIT_CODE: i32 = 3;
}

pub use config::ExperimentConfig;
pub use pipeline::{stages_for, Experiment, Outcome, Overrides, Stage};
