//! Experiment plumbing: configuration, seeded batch runs, output files,
//! parameter sweeps and the verification suites.

pub mod config;
pub mod instances;
pub mod output;
pub mod runner;
pub mod seeds;
pub mod sweep;
pub mod verify;

pub use config::ExperimentConfig;
pub use runner::{run_experiment, AggregateReport, ExperimentResult};
pub use seeds::derive_run_seed;
