//! Weak-convergence experiments for the overdamped Langevin integrators in `brownian-core`.

pub mod config;
pub mod experiments;
pub mod output;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Step(#[from] brownian_core::StepError),
    #[error(transparent)]
    Oracle(#[from] brownian_core::OracleError),
    #[error(transparent)]
    Stats(#[from] brownian_core::StatsError),
    #[error(transparent)]
    Model(#[from] brownian_core::ModelError),
}

pub use config::{ConfigFile, Scale};
pub use output::{emit_results, ExperimentOutput, FitRow, ResultRow};
