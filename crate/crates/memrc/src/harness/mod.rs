//! Experiment orchestration: configuration, seeded multi-trial grid sweeps,
//! architecture comparisons, PSD estimation, and CSV reports.

pub mod calibrate;
pub mod config;
pub mod experiment;
pub mod psd;
pub mod report;
pub mod stats;

use thiserror::Error;

pub use config::{ArchKind, ConfigError, ExperimentConfig, TaskConfig};
pub use experiment::{
    compare_architectures, run_experiment, ComparisonReport, ExperimentReport, TrialRecord,
};
pub use psd::psd;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Circuit(#[from] crate::circuit::CircuitError),
    #[error(transparent)]
    Learn(#[from] crate::learn::LearnError),
    #[error(transparent)]
    Task(#[from] crate::tasks::TaskError),
    #[error(transparent)]
    Device(#[from] crate::device::DeviceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
