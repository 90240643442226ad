//! Pinball-loss quantile regression: loss evaluation, a linear model fitted
//! by averaged subgradient descent, and a pluggable predictor interface.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::util::{ceil_index_guarded, order_statistic};

#[derive(Debug, Error)]
pub enum QuantileError {
    #[error("quantile level must lie strictly inside (0, 1), got {alpha}")]
    InvalidLevel { alpha: f64 },
    #[error("lower level {lower} must be below upper level {upper}")]
    LevelsOutOfOrder { lower: f64, upper: f64 },
    #[error("index set is empty")]
    EmptyIndexSet,
    #[error("expected {expected} feature(s), got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("group label {group} out of range for {group_count} group(s)")]
    UnknownGroup { group: usize, group_count: usize },
    #[error("model parameters are not finite")]
    NonFiniteParameters,
}

/// A quantile level strictly inside the open unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QuantileLevel(f64);

impl QuantileLevel {
    pub fn new(alpha: f64) -> Result<Self, QuantileError> {
        if alpha.is_finite() && alpha > 0.0 && alpha < 1.0 {
            Ok(QuantileLevel(alpha))
        } else {
            Err(QuantileError::InvalidLevel { alpha })
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// The check (pinball) loss: `alpha |y - q|` when `y >= q`, else
/// `(1 - alpha) |y - q|`. Non-negative, zero exactly when `y == q`.
pub fn pinball_loss(y: f64, q: f64, level: QuantileLevel) -> f64 {
    let alpha = level.value();
    let diff = y - q;
    if diff >= 0.0 {
        alpha * diff
    } else {
        (alpha - 1.0) * diff
    }
}

/// Per-column affine transform applied to the augmented feature vector at
/// fit time and inverted implicitly at predict time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardization {
    fn apply(&self, column: usize, value: f64) -> f64 {
        (value - self.means[column]) / self.scales[column]
    }
}

/// Linear conditional quantile model over the features with the sensitive
/// group one-hot appended (no group columns when there is a single group).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearQuantileModel {
    pub level: QuantileLevel,
    /// Weights over the augmented (feature + group one-hot) columns.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub standardization: Option<Standardization>,
    pub feature_dim: usize,
    pub group_count: usize,
}

impl LinearQuantileModel {
    /// Predicted conditional quantile at `(x, s)`.
    pub fn predict(&self, features: &[f64], group: usize) -> Result<f64, QuantileError> {
        if features.len() != self.feature_dim {
            return Err(QuantileError::DimensionMismatch {
                expected: self.feature_dim,
                found: features.len(),
            });
        }
        if group >= self.group_count {
            return Err(QuantileError::UnknownGroup {
                group,
                group_count: self.group_count,
            });
        }
        let augmented = augment(features, group, self.group_count);
        let mut acc = self.intercept;
        for (column, (&w, &v)) in self.weights.iter().zip(augmented.iter()).enumerate() {
            let v = match &self.standardization {
                Some(std) => std.apply(column, v),
                None => v,
            };
            acc += w * v;
        }
        if acc.is_finite() {
            Ok(acc)
        } else {
            Err(QuantileError::NonFiniteParameters)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Anything that produces a conditional quantile estimate at `(x, s)`.
///
/// Implement this to plug an external regressor (forest, network, ...) into
/// the fairness and conformal pipeline.
pub trait QuantilePredictor {
    fn level(&self) -> QuantileLevel;

    fn predict_one(&self, features: &[f64], group: usize) -> Result<f64, QuantileError>;

    fn predict_indices(&self, data: &Dataset, indices: &[usize]) -> Result<Vec<f64>, QuantileError> {
        indices
            .iter()
            .map(|&i| self.predict_one(data.features(i), data.group(i)))
            .collect()
    }
}

impl QuantilePredictor for LinearQuantileModel {
    fn level(&self) -> QuantileLevel {
        self.level
    }

    fn predict_one(&self, features: &[f64], group: usize) -> Result<f64, QuantileError> {
        self.predict(features, group)
    }
}

/// Fitted lower/upper conditional quantile predictors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantilePair {
    pub lower: LinearQuantileModel,
    pub upper: LinearQuantileModel,
}

impl QuantilePair {
    pub fn new(
        lower: LinearQuantileModel,
        upper: LinearQuantileModel,
    ) -> Result<Self, QuantileError> {
        if lower.level.value() >= upper.level.value() {
            return Err(QuantileError::LevelsOutOfOrder {
                lower: lower.level.value(),
                upper: upper.level.value(),
            });
        }
        Ok(QuantilePair { lower, upper })
    }
}

/// Optimizer settings for [`fit_linear_quantile`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Convergence is declared once the best objective improves by less than
    /// this over `tolerance_window` iterations.
    pub tolerance: f64,
    pub tolerance_window: usize,
    /// Step size is `step_scale / sqrt(t)`; defaults to half the response
    /// standard deviation.
    pub step_scale: Option<f64>,
    pub standardize: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 2000,
            tolerance: 1e-8,
            tolerance_window: 50,
            step_scale: None,
            standardize: true,
        }
    }
}

/// Diagnostics from one fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub final_objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// Reports for the two sides of a fitted pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairFitReports {
    pub lower: FitReport,
    pub upper: FitReport,
}

fn augment(features: &[f64], group: usize, group_count: usize) -> Vec<f64> {
    if group_count < 2 {
        return features.to_vec();
    }
    let mut augmented = Vec::with_capacity(features.len() + group_count);
    augmented.extend_from_slice(features);
    for g in 0..group_count {
        augmented.push(if g == group { 1.0 } else { 0.0 });
    }
    augmented
}

/// Fits a linear quantile model by minimizing the mean pinball loss with
/// averaged subgradient descent (step `c / sqrt(t)`), keeping the best
/// iterate seen, then closing with an exact intercept step: for fixed
/// weights the loss is minimized by the empirical `alpha`-quantile of the
/// residuals, so the final objective never exceeds any visited iterate.
pub fn fit_linear_quantile(
    data: &Dataset,
    indices: &[usize],
    level: QuantileLevel,
    opts: &FitOptions,
    _seed: u64,
) -> Result<(LinearQuantileModel, FitReport), QuantileError> {
    if indices.is_empty() {
        return Err(QuantileError::EmptyIndexSet);
    }
    let alpha = level.value();
    let group_count = data.group_count();
    let feature_dim = data.feature_dim();
    let n = indices.len();
    let mut warnings = Vec::new();

    let rows: Vec<Vec<f64>> = indices
        .iter()
        .map(|&i| augment(data.features(i), data.group(i), group_count))
        .collect();
    let responses: Vec<f64> = indices.iter().map(|&i| data.response(i)).collect();
    let dim = rows[0].len();

    let standardization = if opts.standardize && dim > 0 {
        let mut means = vec![0.0; dim];
        for row in &rows {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n as f64;
        }
        let mut scales = vec![0.0; dim];
        for row in &rows {
            for ((s, v), m) in scales.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for (column, s) in scales.iter_mut().enumerate() {
            *s = (*s / n as f64).sqrt();
            if *s < 1e-12 {
                warnings.push(format!(
                    "column {column} has zero variance; dropped from the fit"
                ));
                *s = 1.0;
            }
        }
        Some(Standardization { means, scales })
    } else {
        None
    };
    let design: Vec<Vec<f64>> = match &standardization {
        Some(std) => rows
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(column, &v)| std.apply(column, v))
                    .collect()
            })
            .collect(),
        None => rows,
    };

    let objective = |weights: &[f64], intercept: f64| -> f64 {
        let mut total = 0.0;
        for (row, &y) in design.iter().zip(&responses) {
            let pred: f64 = intercept + row.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>();
            total += pinball_loss(y, pred, level);
        }
        total / n as f64
    };

    let response_sd = {
        let mean = responses.iter().sum::<f64>() / n as f64;
        (responses.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n as f64).sqrt()
    };
    let step_scale = opts.step_scale.unwrap_or(0.5 * response_sd.max(1e-12));

    let mut weights = vec![0.0; dim];
    let mut intercept = 0.0;
    let mut best_weights = weights.clone();
    let mut best_intercept = intercept;
    let mut best_objective = objective(&weights, intercept);
    let mut best_history = vec![best_objective];
    let mut avg_weights = vec![0.0; dim];
    let mut avg_intercept = 0.0;
    let mut avg_count = 0usize;
    let mut converged = false;
    let mut iterations = 0;

    for t in 1..=opts.max_iterations {
        iterations = t;
        let mut grad_w = vec![0.0; dim];
        let mut grad_b = 0.0;
        for (row, &y) in design.iter().zip(&responses) {
            let pred: f64 =
                intercept + row.iter().zip(&weights).map(|(x, w)| x * w).sum::<f64>();
            // subgradient of the pinball loss with respect to the prediction
            let g = if y > pred {
                -alpha
            } else if y < pred {
                1.0 - alpha
            } else {
                0.0
            };
            grad_b += g;
            for (gw, x) in grad_w.iter_mut().zip(row) {
                *gw += g * x;
            }
        }
        let step = step_scale / (t as f64).sqrt() / n as f64;
        intercept -= step * grad_b;
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= step * g;
        }
        let f = objective(&weights, intercept);
        if f < best_objective {
            best_objective = f;
            best_weights.copy_from_slice(&weights);
            best_intercept = intercept;
        }
        best_history.push(best_objective);
        if t > opts.max_iterations / 2 {
            avg_count += 1;
            avg_intercept += intercept;
            for (a, w) in avg_weights.iter_mut().zip(&weights) {
                *a += w;
            }
        }
        if t >= opts.tolerance_window {
            let before = best_history[t - opts.tolerance_window];
            if before - best_objective < opts.tolerance {
                converged = true;
                break;
            }
        }
    }

    if avg_count > 0 {
        for a in &mut avg_weights {
            *a /= avg_count as f64;
        }
        avg_intercept /= avg_count as f64;
        let f = objective(&avg_weights, avg_intercept);
        if f < best_objective {
            best_objective = f;
            best_weights.copy_from_slice(&avg_weights);
            best_intercept = avg_intercept;
        }
    }

    // Exact intercept step: the pinball minimizer over the intercept alone is
    // the empirical alpha-quantile of the residuals.
    let residuals: Vec<f64> = design
        .iter()
        .zip(&responses)
        .map(|(row, &y)| y - row.iter().zip(&best_weights).map(|(x, w)| x * w).sum::<f64>())
        .collect();
    let k = ceil_index_guarded(alpha * n as f64).clamp(1, n);
    let polished = order_statistic(&residuals, k);
    // accept up to float dust so flat minimizer intervals resolve to the
    // canonical order statistic
    if objective(&best_weights, polished)
        <= best_objective + 1e-12 * (1.0 + best_objective.abs())
    {
        best_intercept = polished;
        best_objective = objective(&best_weights, best_intercept);
    }

    if !converged {
        warnings.push(format!(
            "objective still improving after {} iterations",
            opts.max_iterations
        ));
    }

    let model = LinearQuantileModel {
        level,
        weights: best_weights,
        intercept: best_intercept,
        standardization,
        feature_dim,
        group_count,
    };
    let report = FitReport {
        final_objective: best_objective,
        iterations,
        converged,
        warnings,
    };
    Ok((model, report))
}

/// Fits models at `alpha / 2` and `1 - alpha / 2` for miscoverage `alpha`.
pub fn fit_pair(
    data: &Dataset,
    indices: &[usize],
    alpha: f64,
    opts: &FitOptions,
    seed: u64,
) -> Result<(QuantilePair, PairFitReports), QuantileError> {
    let miscoverage = QuantileLevel::new(alpha)?;
    let lower = QuantileLevel::new(miscoverage.value() / 2.0)?;
    let upper = QuantileLevel::new(1.0 - miscoverage.value() / 2.0)?;
    fit_pair_at(data, indices, (lower, upper), opts, seed)
}

/// Fits models at an explicit pair of levels.
pub fn fit_pair_at(
    data: &Dataset,
    indices: &[usize],
    levels: (QuantileLevel, QuantileLevel),
    opts: &FitOptions,
    seed: u64,
) -> Result<(QuantilePair, PairFitReports), QuantileError> {
    let (lower_model, lower_report) = fit_linear_quantile(data, indices, levels.0, opts, seed)?;
    let (upper_model, upper_report) = fit_linear_quantile(data, indices, levels.1, opts, seed)?;
    let pair = QuantilePair::new(lower_model, upper_model)?;
    Ok((
        pair,
        PairFitReports {
            lower: lower_report,
            upper: upper_report,
        },
    ))
}
