//! Experiment sweeps over the product-graph estimators: configuration,
//! seeded execution, CSV/JSON persistence and aggregation.

pub mod config;
pub mod runner;
pub mod summary;

use thiserror::Error;

pub use config::{Experiment, ExperimentConfig, GeneratorKind, Method, SampleCount};
pub use runner::{generate_instance, run_experiment, write_outputs, Instance, ResultRow, RunRecord};
pub use summary::{summarize, SummaryRow};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
}
