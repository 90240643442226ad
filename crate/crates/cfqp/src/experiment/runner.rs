//! Drives repeated split/fit/synchronize/conformalize/evaluate runs and
//! writes per-repetition CSVs plus a summary.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    generate_synthetic, interquartile_range, load_csv, split, Dataset, SplitIndices,
};
use crate::fair::{FairTransformOptions, JitterConfig};
use crate::metrics::EvaluationReport;
use crate::quantile::{fit_pair, fit_pair_at, FitOptions, QuantileLevel, QuantilePair};

use super::config::{DataSource, ExperimentConfig, Method, SigmaRule};
use super::pipeline::{run_cfqp, unfair_baseline, FairMode, MethodOutput, TailMode};
use super::seeding::{derive_seed, Stage};
use super::ExperimentError;

/// Mean and standard error of one metric over the completed repetitions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStat {
    pub mean: f64,
    pub stderr: f64,
}

/// Per-method aggregate in Table-style form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodSummary {
    pub metrics: BTreeMap<String, MetricStat>,
}

/// Whole-experiment aggregate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub methods: BTreeMap<String, MethodSummary>,
    pub repetitions_completed: usize,
    pub repetitions_aborted: usize,
    pub group_count: usize,
}

/// Everything the runner produced, including where the files landed.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub summary: ExperimentSummary,
    pub per_repetition: BTreeMap<String, Vec<(u64, EvaluationReport)>>,
    pub csv_paths: BTreeMap<String, PathBuf>,
    pub summary_path: PathBuf,
}

pub(crate) const SUMMARY_METRICS: &[&str] = &[
    "coverage",
    "mean_length",
    "ks_lo",
    "ks_hi",
    "mae_lo",
    "mae_hi",
    "crossing_count",
];

/// Runs the configured experiment: for repetition `r`, stage seeds derive
/// from `(base_seed, r, stage)`, the data is split, the quantile pair fitted,
/// each requested method executed, and the held-out test set evaluated.
/// A repetition that fails is logged and skipped; the run fails once more
/// than 10% of repetitions abort.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome, ExperimentError> {
    let loaded = match &config.source {
        DataSource::Csv { path, schema } => Some(load_csv(path, schema)?),
        DataSource::Synthetic { .. } => None,
    };
    let mut per_repetition: BTreeMap<String, Vec<(u64, EvaluationReport)>> = config
        .methods
        .iter()
        .map(|m| (m.name().to_string(), Vec::new()))
        .collect();
    let mut aborted = 0usize;
    let mut group_count = 0usize;
    for rep in 0..config.repetitions {
        match run_single_repetition(config, rep as u64, loaded.as_ref().map(|l| &l.dataset)) {
            Ok(outputs) => {
                for (method, report) in outputs.reports {
                    per_repetition
                        .get_mut(method.name())
                        .expect("method registered")
                        .push((config.base_seed + rep as u64, report));
                }
                group_count = outputs.group_count;
            }
            Err(error) => {
                aborted += 1;
                eprintln!("repetition {rep} aborted: {error}");
            }
        }
    }
    if aborted * 10 > config.repetitions {
        return Err(ExperimentError::TooManyAborts {
            aborted,
            total: config.repetitions,
        });
    }

    let mut methods = BTreeMap::new();
    for (name, rows) in &per_repetition {
        methods.insert(name.clone(), summarize_method(rows));
    }
    let summary = ExperimentSummary {
        methods,
        repetitions_completed: config.repetitions - aborted,
        repetitions_aborted: aborted,
        group_count,
    };

    std::fs::create_dir_all(&config.output_dir).map_err(|e| ExperimentError::Io {
        path: config.output_dir.display().to_string(),
        source: e,
    })?;
    let mut csv_paths = BTreeMap::new();
    for (name, rows) in &per_repetition {
        let path = config.output_dir.join(format!("{name}.csv"));
        write_repetition_csv(&path, rows, group_count)?;
        csv_paths.insert(name.clone(), path);
    }
    let summary_path = config.output_dir.join("summary.json");
    let json =
        serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&summary_path, json).map_err(|e| ExperimentError::Io {
        path: summary_path.display().to_string(),
        source: e,
    })?;

    Ok(ExperimentOutcome {
        summary,
        per_repetition,
        csv_paths,
        summary_path,
    })
}

struct RepetitionOutputs {
    reports: Vec<(Method, EvaluationReport)>,
    group_count: usize,
}

fn run_single_repetition(
    config: &ExperimentConfig,
    rep: u64,
    csv_data: Option<&Dataset>,
) -> Result<RepetitionOutputs, ExperimentError> {
    let base = config.base_seed;
    let (pool, test, splits) = match (&config.source, csv_data) {
        (
            DataSource::Synthetic {
                scenario,
                n_train,
                n_cal,
                n_test,
            },
            _,
        ) => {
            let pool = generate_synthetic(
                scenario,
                n_train + n_cal,
                derive_seed(base, rep, Stage::Data),
            )?;
            let test = generate_synthetic(scenario, *n_test, derive_seed(base, rep, Stage::Test))?;
            let fraction = *n_cal as f64 / (*n_train + *n_cal) as f64;
            let splits = split(&pool, fraction, derive_seed(base, rep, Stage::Split))?;
            (pool, test, splits)
        }
        (DataSource::Csv { .. }, Some(full)) => {
            let (pool, test) =
                carve_test_set(full, config.test_fraction, derive_seed(base, rep, Stage::Data))?;
            let splits = split(
                &pool,
                config.calibration_fraction,
                derive_seed(base, rep, Stage::Split),
            )?;
            (pool, test, splits)
        }
        (DataSource::Csv { .. }, None) => unreachable!("csv data loaded upfront"),
    };

    warn_small_groups(&pool, config.min_group_size, rep);

    let fit_opts = FitOptions::default();
    let fit_seed = derive_seed(base, rep, Stage::Fit);
    let (pair, _reports) = match config.levels {
        Some((lo, hi)) => fit_pair_at(
            &pool,
            &splits.proper_training,
            (QuantileLevel::new(lo)?, QuantileLevel::new(hi)?),
            &fit_opts,
            fit_seed,
        )?,
        None => fit_pair(&pool, &splits.proper_training, config.alpha, &fit_opts, fit_seed)?,
    };

    let sigma = match config.sigma {
        SigmaRule::Fixed(value) => value,
        SigmaRule::Auto => 1e-6 * interquartile_range(&pool.responses()),
    };
    let fair_opts = FairTransformOptions {
        jitter: JitterConfig::new(sigma, derive_seed(base, rep, Stage::Jitter))?,
        smoothing: config.smoothing,
        grid_size: config.grid_size,
    };

    let mut reports = Vec::new();
    for &method in &config.methods {
        let output = run_method(
            method,
            &pair,
            &pool,
            &splits,
            &test,
            config.alpha,
            &fair_opts,
            derive_seed(base, rep, Stage::TieBreak),
        )?;
        let report = crate::metrics::evaluate(
            &test.responses(),
            &test.groups(),
            test.group_count(),
            &output.lower_endpoints,
            &output.upper_endpoints,
            &output.intervals,
        )?;
        reports.push((method, report));
    }
    Ok(RepetitionOutputs {
        reports,
        group_count: test.group_count(),
    })
}

#[allow(clippy::too_many_arguments)]
fn run_method(
    method: Method,
    pair: &QuantilePair,
    pool: &Dataset,
    splits: &SplitIndices,
    test: &Dataset,
    alpha: f64,
    fair_opts: &FairTransformOptions,
    tie_break_seed: u64,
) -> Result<MethodOutput, ExperimentError> {
    match method {
        Method::Cfqp => run_cfqp(
            pair,
            pool,
            splits,
            test,
            alpha,
            &FairMode::Synchronized(fair_opts.clone()),
            TailMode::Symmetric,
            tie_break_seed,
        ),
        Method::Cqr => {
            let out = crate::conformal::cqr_baseline(pair, pool, splits, test, alpha)?;
            Ok(MethodOutput {
                lower_endpoints: out.lower_endpoints,
                upper_endpoints: out.upper_endpoints,
                intervals: out.intervals,
                calibration: out.calibration,
                monotonicity_repairs: 0,
            })
        }
        Method::Unfair => unfair_baseline(pair, test, alpha),
    }
}

/// Splits off a held-out test fraction before any train/calibration split.
fn carve_test_set(
    full: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), ExperimentError> {
    let n = full.len();
    let m = (test_fraction * n as f64).round() as usize;
    if m == 0 || m >= n {
        return Err(crate::dataset::DatasetError::DegenerateSplit {
            n,
            fraction: test_fraction,
        }
        .into());
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut test_indices = order[..m].to_vec();
    let mut pool_indices = order[m..].to_vec();
    test_indices.sort_unstable();
    pool_indices.sort_unstable();
    let subset = |indices: &[usize]| -> Result<Dataset, ExperimentError> {
        let observations = indices
            .iter()
            .map(|&i| full.observation(i).clone())
            .collect();
        Ok(Dataset::new(observations, full.group_count())?)
    };
    Ok((subset(&pool_indices)?, subset(&test_indices)?))
}

fn warn_small_groups(pool: &Dataset, floor: usize, rep: u64) {
    let mut counts = vec![0usize; pool.group_count()];
    for g in pool.groups() {
        counts[g] += 1;
    }
    for (group, count) in counts.iter().enumerate() {
        if *count < floor {
            eprintln!(
                "repetition {rep}: group {group} has only {count} member(s), below the floor of {floor}"
            );
        }
    }
}

fn summarize_method(rows: &[(u64, EvaluationReport)]) -> MethodSummary {
    let mut metrics = BTreeMap::new();
    for &metric in SUMMARY_METRICS {
        let values: Vec<f64> = rows
            .iter()
            .map(|(_, report)| metric_value(report, metric))
            .collect();
        metrics.insert(metric.to_string(), stat_of(&values));
    }
    MethodSummary { metrics }
}

pub(crate) fn metric_value(report: &EvaluationReport, metric: &str) -> f64 {
    match metric {
        "coverage" => report.coverage,
        "mean_length" => report.mean_length,
        "ks_lo" => report.ks_lo,
        "ks_hi" => report.ks_hi,
        "mae_lo" => report.mae_lo,
        "mae_hi" => report.mae_hi,
        "crossing_count" => report.crossing_count as f64,
        other => unreachable!("unknown metric {other}"),
    }
}

pub(crate) fn stat_of(values: &[f64]) -> MetricStat {
    if values.is_empty() {
        return MetricStat {
            mean: f64::NAN,
            stderr: f64::NAN,
        };
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let stderr = if values.len() > 1 {
        let variance =
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        (variance / n).sqrt()
    } else {
        0.0
    };
    MetricStat { mean, stderr }
}

fn write_repetition_csv(
    path: &PathBuf,
    rows: &[(u64, EvaluationReport)],
    group_count: usize,
) -> Result<(), ExperimentError> {
    let io_error = |e: std::io::Error| ExperimentError::Io {
        path: path.display().to_string(),
        source: e,
    };
    let mut file = std::fs::File::create(path).map_err(io_error)?;
    writeln!(file, "{}", EvaluationReport::csv_header(group_count).join(",")).map_err(io_error)?;
    for (seed, report) in rows {
        writeln!(file, "{}", report.csv_row(*seed).join(",")).map_err(io_error)?;
    }
    Ok(())
}

impl ExperimentSummary {
    /// Plain-text table, one row per method.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<8} {:>18} {:>18} {:>15} {:>15} {:>15} {:>15}\n",
            "method", "coverage", "length", "KS(lo)", "KS(hi)", "MAE(lo)", "MAE(hi)"
        ));
        for (name, summary) in &self.methods {
            let cell = |metric: &str| -> String {
                let stat = &summary.metrics[metric];
                format!("{:.4}±{:.4}", stat.mean, stat.stderr)
            };
            out.push_str(&format!(
                "{:<8} {:>18} {:>18} {:>15} {:>15} {:>15} {:>15}\n",
                name,
                cell("coverage"),
                cell("mean_length"),
                cell("ks_lo"),
                cell("ks_hi"),
                cell("mae_lo"),
                cell("mae_hi"),
            ));
        }
        out.push_str(&format!(
            "repetitions: {} completed, {} aborted\n",
            self.repetitions_completed, self.repetitions_aborted
        ));
        out
    }
}
