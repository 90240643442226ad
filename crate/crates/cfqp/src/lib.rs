//! Conformalized fair quantile prediction.
//!
//! Fits conditional quantile regressors, post-processes their outputs into
//! demographic-parity-fair quantiles through a one-dimensional Wasserstein-2
//! barycenter of kernel-smoothed group quantile functions, and wraps the fair
//! endpoints in split-conformal prediction intervals with finite-sample
//! coverage.
//!
//! The crate is organized around the pipeline stages:
//!
//! - [`dataset`]: (features, group, response) samples, CSV I/O, seeded
//!   splits, group partitions, and synthetic benchmark scenarios.
//! - [`quantile`]: pinball loss, a linear quantile regressor fitted by
//!   subgradient descent, and the pluggable predictor trait.
//! - [`fair`]: jittering, per-group empirical CDFs, smoothed quantile
//!   functions, and the barycenter synchronization of calibration and test
//!   predictions.
//! - [`conformal`]: conformity scores, finite-sample margins, symmetric and
//!   tail-separated intervals, and the plain CQR baseline.
//! - [`metrics`]: coverage, interval length, KS unfairness, MAE, and the KS
//!   test utilities.
//! - [`experiment`]: the repeated-split experiment harness behind the `cfqp`
//!   binary.
//!
//! The `examples/` directory walks through each capability; start with
//! `cargo run --example conformal_interval`.

pub mod conformal;
pub mod dataset;
pub mod experiment;
pub mod fair;
pub mod metrics;
pub mod quantile;
mod util;

pub use conformal::{
    calibrate_asymmetric, calibrate_symmetric, conformal_margin, conformity_scores, cqr_baseline,
    predict_interval, ConformalCalibration, ConformalError, ConformityScores, PredictionInterval,
};
pub use dataset::{
    generate_synthetic, load_csv, partition_by_group, split, split_stratified, write_csv,
    CsvSchema, Dataset, DatasetError, GroupPartition, Observation, SplitIndices, SyntheticConfig,
};
pub use experiment::{
    run_cfqp, run_experiment, validate_config, ExperimentConfig, ExperimentError, FairMode,
    TailMode,
};
pub use fair::{
    fit_transformer, jitter, Bandwidth, EmpiricalCdf, FairError, FairTransformOptions,
    FairTransformer, GroupPredictions, JitterConfig, KernelKind, SmoothedQuantileFn,
    SmoothingMethod,
};
pub use metrics::{
    coverage, evaluate, ks_unfairness, mae, two_sample_ks, EvaluationReport, MetricsError,
};
pub use quantile::{
    fit_linear_quantile, fit_pair, fit_pair_at, pinball_loss, FitOptions, FitReport,
    LinearQuantileModel, QuantileError, QuantileLevel, QuantilePair, QuantilePredictor,
};
