//! Experiment harness: configuration files, instance formats, seeded batch
//! runs with CSV output, oracle verification and the phase-transition sweep.

pub mod cache;
pub mod config;
pub mod error;
pub mod experiment;
pub mod fit;
pub mod formats;
pub mod output;
pub mod sweep;
pub mod verify;

pub use config::{Algorithm, Budget, DomainParams, ExperimentConfig, TreeParams};
pub use error::{BenchError, Result};
pub use experiment::{run_experiment, run_trials, ExperimentReport};
