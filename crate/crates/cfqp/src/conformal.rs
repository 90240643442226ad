//! Split conformal calibration: conformity scores, the finite-sample margin,
//! symmetric and tail-separated interval construction, and the plain
//! conformalized-quantile-regression baseline.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, SplitIndices};
use crate::quantile::{QuantilePair, QuantilePredictor};
use crate::util::ceil_index_guarded;

#[derive(Debug, Error)]
pub enum ConformalError {
    #[error("prediction and response lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("conformity scores are empty")]
    EmptyScores,
    #[error("miscoverage level must lie strictly inside (0, 1), got {alpha}")]
    InvalidAlpha { alpha: f64 },
    #[error("calibration mode mismatch: expected {expected}")]
    ModeMismatch { expected: &'static str },
    #[error("score {index} is not finite")]
    NonFiniteScore { index: usize },
    #[error(transparent)]
    Quantile(#[from] crate::quantile::QuantileError),
}

/// Conformity scores over the calibration set, sorted ascending. Scores may
/// be negative: interior responses witness an over-covering plug-in band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformityScores {
    sorted: Vec<f64>,
}

impl ConformityScores {
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    fn from_raw(raw: Vec<f64>) -> Result<Self, ConformalError> {
        if raw.is_empty() {
            return Err(ConformalError::EmptyScores);
        }
        if let Some(index) = raw.iter().position(|v| !v.is_finite()) {
            return Err(ConformalError::NonFiniteScore { index });
        }
        let mut sorted = raw;
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(ConformityScores { sorted })
    }
}

/// `E_i = max(lower_i - y_i, y_i - upper_i)` per calibration point, sorted.
pub fn conformity_scores(
    lower_predictions: &[f64],
    upper_predictions: &[f64],
    responses: &[f64],
) -> Result<ConformityScores, ConformalError> {
    check_lengths(lower_predictions.len(), upper_predictions.len())?;
    check_lengths(lower_predictions.len(), responses.len())?;
    let raw = lower_predictions
        .iter()
        .zip(upper_predictions)
        .zip(responses)
        .map(|((&lo, &hi), &y)| (lo - y).max(y - hi))
        .collect();
    ConformityScores::from_raw(raw)
}

/// The `(1 - alpha)(1 + 1/n)`-th empirical quantile of the scores: the
/// `ceil((1 - alpha)(n + 1))`-th order statistic, or the maximum score when
/// that level exceeds one.
pub fn conformal_margin(scores: &ConformityScores, alpha: f64) -> Result<f64, ConformalError> {
    if scores.is_empty() {
        return Err(ConformalError::EmptyScores);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(ConformalError::InvalidAlpha { alpha });
    }
    let n = scores.len();
    let k = ceil_index_guarded((1.0 - alpha) * (n as f64 + 1.0)).clamp(1, n);
    Ok(scores.sorted[k - 1])
}

/// Margin mode: one shared margin, or independent left/right tail margins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalibrationMode {
    Symmetric { margin: f64 },
    Asymmetric { margin_lo: f64, margin_hi: f64 },
}

/// Calibrated margin(s) at a miscoverage level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConformalCalibration {
    pub alpha: f64,
    pub mode: CalibrationMode,
}

impl ConformalCalibration {
    /// Interval under either mode.
    pub fn interval(&self, lower_prediction: f64, upper_prediction: f64) -> PredictionInterval {
        match self.mode {
            CalibrationMode::Symmetric { margin } => PredictionInterval {
                lower: lower_prediction - margin,
                upper: upper_prediction + margin,
            },
            CalibrationMode::Asymmetric {
                margin_lo,
                margin_hi,
            } => PredictionInterval {
                lower: lower_prediction - margin_lo,
                upper: upper_prediction + margin_hi,
            },
        }
    }
}

/// Shared-margin calibration from calibration-set predictions and responses.
pub fn calibrate_symmetric(
    lower_predictions: &[f64],
    upper_predictions: &[f64],
    responses: &[f64],
    alpha: f64,
) -> Result<ConformalCalibration, ConformalError> {
    let scores = conformity_scores(lower_predictions, upper_predictions, responses)?;
    let margin = conformal_margin(&scores, alpha)?;
    Ok(ConformalCalibration {
        alpha,
        mode: CalibrationMode::Symmetric { margin },
    })
}

/// Tail-separated calibration: the lower margin is the
/// `(1 - alpha_lo)(1 + 1/n)`-th quantile of the lower-tail scores
/// `lower_i - y_i`, the upper margin the analogue of `y_i - upper_i`.
/// Spreads the coverage error over the tails in any chosen proportion.
pub fn calibrate_asymmetric(
    lower_predictions: &[f64],
    upper_predictions: &[f64],
    responses: &[f64],
    alpha_lo: f64,
    alpha_hi: f64,
) -> Result<ConformalCalibration, ConformalError> {
    check_lengths(lower_predictions.len(), upper_predictions.len())?;
    check_lengths(lower_predictions.len(), responses.len())?;
    let lower_scores = ConformityScores::from_raw(
        lower_predictions
            .iter()
            .zip(responses)
            .map(|(&lo, &y)| lo - y)
            .collect(),
    )?;
    let upper_scores = ConformityScores::from_raw(
        upper_predictions
            .iter()
            .zip(responses)
            .map(|(&hi, &y)| y - hi)
            .collect(),
    )?;
    let margin_lo = conformal_margin(&lower_scores, alpha_lo)?;
    let margin_hi = conformal_margin(&upper_scores, alpha_hi)?;
    Ok(ConformalCalibration {
        alpha: alpha_lo + alpha_hi,
        mode: CalibrationMode::Asymmetric {
            margin_lo,
            margin_hi,
        },
    })
}

/// A closed prediction band. `lower > upper` is possible (the margins can be
/// negative); such intervals are kept as-is, reported as crossed, and never
/// cover.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: f64,
}

impl PredictionInterval {
    pub fn is_crossed(&self) -> bool {
        self.lower > self.upper
    }

    /// Closed-interval membership; crossed intervals cover nothing.
    pub fn covers(&self, y: f64) -> bool {
        self.lower <= y && y <= self.upper
    }

    pub fn length(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `[lower - margin, upper + margin]` under a symmetric calibration.
pub fn predict_interval(
    lower_prediction: f64,
    upper_prediction: f64,
    calibration: &ConformalCalibration,
) -> Result<PredictionInterval, ConformalError> {
    match calibration.mode {
        CalibrationMode::Symmetric { .. } => {
            Ok(calibration.interval(lower_prediction, upper_prediction))
        }
        CalibrationMode::Asymmetric { .. } => Err(ConformalError::ModeMismatch {
            expected: "symmetric",
        }),
    }
}

/// Output of the pooled CQR baseline on a test set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CqrOutput {
    /// Raw lower quantile predictions at the test points.
    pub lower_endpoints: Vec<f64>,
    /// Raw upper quantile predictions at the test points.
    pub upper_endpoints: Vec<f64>,
    pub intervals: Vec<PredictionInterval>,
    pub calibration: ConformalCalibration,
}

/// Conformalized quantile regression without any fairness adjustment: raw
/// quantile predictions on the calibration set give the scores and margin,
/// raw test predictions give the band.
pub fn cqr_baseline(
    pair: &QuantilePair,
    data: &Dataset,
    splits: &SplitIndices,
    test: &Dataset,
    alpha: f64,
) -> Result<CqrOutput, ConformalError> {
    let cal_lower = pair.lower.predict_indices(data, &splits.calibration)?;
    let cal_upper = pair.upper.predict_indices(data, &splits.calibration)?;
    let cal_responses: Vec<f64> = splits
        .calibration
        .iter()
        .map(|&i| data.response(i))
        .collect();
    let calibration = calibrate_symmetric(&cal_lower, &cal_upper, &cal_responses, alpha)?;
    let test_indices: Vec<usize> = (0..test.len()).collect();
    let lower_endpoints = pair.lower.predict_indices(test, &test_indices)?;
    let upper_endpoints = pair.upper.predict_indices(test, &test_indices)?;
    let intervals = lower_endpoints
        .iter()
        .zip(&upper_endpoints)
        .map(|(&lo, &hi)| calibration.interval(lo, hi))
        .collect();
    Ok(CqrOutput {
        lower_endpoints,
        upper_endpoints,
        intervals,
        calibration,
    })
}

fn check_lengths(left: usize, right: usize) -> Result<(), ConformalError> {
    if left == right {
        Ok(())
    } else {
        Err(ConformalError::LengthMismatch { left, right })
    }
}
