//! Experiment runner behind the `decaylab` binary.

pub mod compare;
pub mod config;
pub mod report;
pub mod runner;
pub mod scenarios;

pub use config::ExperimentConfig;
pub use report::RunReport;
pub use runner::run_experiment;
