//! Repeated-split experiment harness: configuration, the per-repetition
//! pipeline, seeding, and the summary/CSV reporting layer.

mod config;
mod pipeline;
mod runner;
mod seeding;

pub use config::{
    parse_config_str, validate_config, ConfigError, DataSource, ExperimentConfig, Method,
    Overrides, SigmaRule,
};
pub use pipeline::{run_cfqp, unfair_baseline, FairMode, MethodOutput, TailMode};
pub use runner::{run_experiment, ExperimentOutcome, ExperimentSummary, MethodSummary, MetricStat};
pub use seeding::{derive_seed, splitmix64, Stage};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
    #[error(transparent)]
    Quantile(#[from] crate::quantile::QuantileError),
    #[error(transparent)]
    Fair(#[from] crate::fair::FairError),
    #[error(transparent)]
    Conformal(#[from] crate::conformal::ConformalError),
    #[error(transparent)]
    Metrics(#[from] crate::metrics::MetricsError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{aborted} of {total} repetitions aborted; more than 10% failed")]
    TooManyAborts { aborted: usize, total: usize },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
