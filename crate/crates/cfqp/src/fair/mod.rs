//! Demographic-parity synchronization of quantile predictions.
//!
//! Per sensitive group, the raw conditional quantile estimates are jittered,
//! summarized by an empirical CDF and a (optionally kernel-smoothed) quantile
//! function, and then pushed through the weighted barycenter composition
//! `sum_s' w_s' Q_s'(F_s(value))`: the value's rank inside its own group is
//! re-read through the population mixture of group quantile functions, which
//! makes the output distribution identical across groups.

mod smoothing;

pub use smoothing::{Bandwidth, KernelKind, SmoothedQuantileFn, SmoothingMethod};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantile::QuantileLevel;

#[derive(Debug, Error)]
pub enum FairError {
    #[error("jitter sigma must be non-negative and finite, got {sigma}")]
    InvalidSigma { sigma: f64 },
    #[error("sample is empty")]
    EmptySample,
    #[error("sample for group {group} is empty")]
    EmptyGroup { group: usize },
    #[error("sample contains a non-finite value")]
    NonFiniteSample,
    #[error("group label {group} out of range for {group_count} group(s)")]
    UnknownGroup { group: usize, group_count: usize },
    #[error("quantile rank {t} outside (0, 1]")]
    RankOutOfRange { t: f64 },
    #[error("bandwidth {bandwidth} outside (0, 0.5)")]
    InvalidBandwidth { bandwidth: f64 },
    #[error("local-linear radius {radius} outside (0, 0.5]")]
    InvalidRadius { radius: f64 },
    #[error("quantile grid needs at least 16 points, got {grid_size}")]
    GridTooSmall { grid_size: usize },
    #[error("got {groups} group sample(s) but {weights} weight(s)")]
    WeightCountMismatch { groups: usize, weights: usize },
    #[error("group weights sum to {sum}, expected 1")]
    InvalidWeights { sum: f64 },
    #[error("calibration has {calibration} group(s) but training has {training}")]
    GroupCountMismatch { calibration: usize, training: usize },
}

/// Uniform tie-breaking noise on `[-sigma, sigma]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterConfig {
    pub sigma: f64,
    pub seed: u64,
}

impl JitterConfig {
    pub fn new(sigma: f64, seed: u64) -> Result<Self, FairError> {
        if sigma.is_finite() && sigma >= 0.0 {
            Ok(JitterConfig { sigma, seed })
        } else {
            Err(FairError::InvalidSigma { sigma })
        }
    }

    /// No-op jitter; outputs equal inputs exactly.
    pub fn disabled() -> Self {
        JitterConfig { sigma: 0.0, seed: 0 }
    }
}

/// Adds i.i.d. uniform noise on `[-sigma, sigma]` to each value,
/// deterministically given the config seed. With `sigma == 0` the input is
/// returned bit-for-bit and no random numbers are consumed.
pub fn jitter(values: &[f64], config: &JitterConfig) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    jitter_with_rng(values, config.sigma, &mut rng)
}

pub(crate) fn jitter_with_rng<R: Rng>(values: &[f64], sigma: f64, rng: &mut R) -> Vec<f64> {
    if sigma == 0.0 {
        return values.to_vec();
    }
    values
        .iter()
        .map(|&v| v + jitter_draw(sigma, rng))
        .collect()
}

pub(crate) fn jitter_draw<R: Rng>(sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    sigma * (2.0 * rng.random::<f64>() - 1.0)
}

/// Empirical CDF of a finite sample, stored sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(values: &[f64]) -> Result<Self, FairError> {
        if values.is_empty() {
            return Err(FairError::EmptySample);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(FairError::NonFiniteSample);
        }
        let mut sorted = values.to_vec();
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(EmpiricalCdf { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    /// `F(t)`: fraction of sample values `<= t`; right-continuous step
    /// function with values in `[0, 1]`.
    pub fn eval(&self, t: f64) -> f64 {
        let below_or_equal = self.sorted.partition_point(|&v| v <= t);
        below_or_equal as f64 / self.sorted.len() as f64
    }

    /// Generalized inverse `inf { y : F(y) >= t }` for `t` in `(0, 1]`: the
    /// `ceil(t * N)`-th order statistic, with the index clamped to `[1, N]`.
    pub fn quantile(&self, t: f64) -> Result<f64, FairError> {
        if !(t > 0.0 && t <= 1.0) {
            return Err(FairError::RankOutOfRange { t });
        }
        Ok(self.quantile_clamped(t))
    }

    /// As [`EmpiricalCdf::quantile`] but total: ranks at or below zero hit
    /// the minimum, ranks at or above one hit the maximum.
    pub(crate) fn quantile_clamped(&self, t: f64) -> f64 {
        let n = self.sorted.len();
        let k = crate::util::ceil_index_guarded(t * n as f64).clamp(1, n);
        self.sorted[k - 1]
    }
}

/// Clamps a CDF output away from the boundary ranks 0 and 1, which the
/// quantile representations cannot evaluate exactly.
pub(crate) fn clamp_rank(r: f64, n: usize) -> f64 {
    let floor = 1.0 / (2.0 * n as f64);
    if r <= 0.0 {
        floor
    } else if r >= 1.0 {
        1.0 - floor
    } else {
        r
    }
}

/// Fitting inputs for one sensitive group: quantile predictions evaluated on
/// the calibration set and on the proper training set.
#[derive(Debug, Clone)]
pub struct GroupPredictions {
    pub calibration: Vec<f64>,
    pub training: Vec<f64>,
}

/// Options for [`fit_transformer`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FairTransformOptions {
    pub jitter: JitterConfig,
    pub smoothing: SmoothingMethod,
    pub grid_size: usize,
}

impl FairTransformOptions {
    pub fn new(jitter: JitterConfig, smoothing: SmoothingMethod) -> Self {
        FairTransformOptions {
            jitter,
            smoothing,
            grid_size: smoothing::DEFAULT_GRID_SIZE,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GroupChannel {
    /// Jittered calibration predictions, in input order.
    calibration_jittered: Vec<f64>,
    /// Empirical CDF of the jittered calibration predictions.
    calibration_cdf: EmpiricalCdf,
    /// Quantile function of the jittered calibration predictions.
    smoothed: SmoothedQuantileFn,
    /// Jittered training predictions, sorted, for the randomized rank of a
    /// test point.
    training_jittered: Vec<f64>,
}

/// Fitted state of the synchronization step for one quantile level: one
/// channel per group plus the empirical group weights.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FairTransformer {
    level: QuantileLevel,
    weights: Vec<f64>,
    groups: Vec<GroupChannel>,
    jitter: JitterConfig,
}

/// Builds the per-group jittered samples, calibration CDFs, smoothed quantile
/// functions, and training ranks for one quantile level.
///
/// `predictions[s]` holds group `s`'s calibration and training predictions;
/// `weights[s]` is the empirical group proportion on the calibration set.
pub fn fit_transformer(
    level: QuantileLevel,
    predictions: &[GroupPredictions],
    weights: &[f64],
    opts: &FairTransformOptions,
) -> Result<FairTransformer, FairError> {
    let group_count = predictions.len();
    if group_count == 0 {
        return Err(FairError::EmptyGroup { group: 0 });
    }
    if weights.len() != group_count {
        return Err(FairError::WeightCountMismatch {
            groups: group_count,
            weights: weights.len(),
        });
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || weights.iter().any(|&w| w < 0.0) {
        return Err(FairError::InvalidWeights { sum });
    }
    if opts.jitter.sigma < 0.0 || !opts.jitter.sigma.is_finite() {
        return Err(FairError::InvalidSigma {
            sigma: opts.jitter.sigma,
        });
    }
    let mut groups = Vec::with_capacity(group_count);
    for (group, preds) in predictions.iter().enumerate() {
        if preds.calibration.is_empty() || preds.training.is_empty() {
            return Err(FairError::EmptyGroup { group });
        }
        // independent jitter streams per group and per sample role
        let mut calibration_rng =
            ChaCha8Rng::seed_from_u64(mix_seed(opts.jitter.seed, group as u64, 0));
        let mut training_rng =
            ChaCha8Rng::seed_from_u64(mix_seed(opts.jitter.seed, group as u64, 1));
        let calibration_jittered =
            jitter_with_rng(&preds.calibration, opts.jitter.sigma, &mut calibration_rng);
        let mut training_jittered =
            jitter_with_rng(&preds.training, opts.jitter.sigma, &mut training_rng);
        training_jittered.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let calibration_cdf = EmpiricalCdf::new(&calibration_jittered)?;
        let smoothed =
            SmoothedQuantileFn::fit(&calibration_cdf, &opts.smoothing, opts.grid_size)?;
        groups.push(GroupChannel {
            calibration_jittered,
            calibration_cdf,
            smoothed,
            training_jittered,
        });
    }
    Ok(FairTransformer {
        level,
        weights: weights.to_vec(),
        groups,
        jitter: opts.jitter,
    })
}

fn mix_seed(seed: u64, group: u64, role: u64) -> u64 {
    crate::experiment::splitmix64(seed ^ crate::experiment::splitmix64(group.wrapping_shl(1) | role))
}

impl FairTransformer {
    pub fn level(&self) -> QuantileLevel {
        self.level
    }

    pub fn group_count(&self) -> usize {
        self.groups.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn jitter_config(&self) -> JitterConfig {
        self.jitter
    }

    /// Jittered calibration predictions of one group, in fit input order.
    /// These are the values [`FairTransformer::synchronize_calibration`]
    /// expects back.
    pub fn calibration_values(&self, group: usize) -> Result<&[f64], FairError> {
        self.channel(group)
            .map(|c| c.calibration_jittered.as_slice())
    }

    /// Grid-monotonicity repairs applied while smoothing, summed over groups.
    pub fn monotonicity_repairs(&self) -> usize {
        self.groups.iter().map(|c| c.smoothed.repairs()).sum()
    }

    /// The fitted quantile-function representation of one group.
    pub fn smoothed_quantile_fn(&self, group: usize) -> Result<&SmoothedQuantileFn, FairError> {
        self.channel(group).map(|c| &c.smoothed)
    }

    fn channel(&self, group: usize) -> Result<&GroupChannel, FairError> {
        self.groups.get(group).ok_or(FairError::UnknownGroup {
            group,
            group_count: self.groups.len(),
        })
    }

    /// Weighted barycenter quantile at an already-clamped rank.
    fn barycenter_at(&self, r: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.groups)
            .map(|(w, channel)| w * channel.smoothed.eval(r))
            .sum()
    }

    /// Fair value of an already-jittered calibration prediction from `group`:
    /// the own-group calibration CDF locates its rank and the weighted sum of
    /// all groups' quantile functions re-reads it.
    pub fn synchronize_calibration(
        &self,
        jittered_prediction: f64,
        group: usize,
    ) -> Result<f64, FairError> {
        let own = self.channel(group)?;
        let r = own.calibration_cdf.eval(jittered_prediction);
        Ok(self.barycenter_at(clamp_rank(r, own.calibration_cdf.len())))
    }

    /// Randomized training-set CDF at `t` for `group`: strict-inequality
    /// count plus `u` times the tie mass (including the point itself),
    /// normalized by the training size plus one. Raw value in `[0, 1]`;
    /// boundary ranks are clamped downstream.
    pub fn randomized_training_cdf(
        &self,
        group: usize,
        t: f64,
        u: f64,
    ) -> Result<f64, FairError> {
        let own = self.channel(group)?;
        let below = own.training_jittered.partition_point(|&v| v < t);
        let below_or_equal = own.training_jittered.partition_point(|&v| v <= t);
        let ties = below_or_equal - below;
        let n = own.training_jittered.len();
        Ok((below as f64 + u * (1.0 + ties as f64)) / (n as f64 + 1.0))
    }

    /// Fair value of an un-jittered test prediction from `group`. The rng
    /// supplies the jitter draw and then the tie-breaking uniform.
    pub fn synchronize_test<R: Rng>(
        &self,
        raw_prediction: f64,
        group: usize,
        rng: &mut R,
    ) -> Result<f64, FairError> {
        let noise = jitter_draw(self.jitter.sigma, rng);
        let u: f64 = rng.random();
        self.synchronize_test_given(raw_prediction, group, noise, u)
    }

    /// Deterministic core of [`FairTransformer::synchronize_test`] with the
    /// randomization supplied explicitly.
    pub fn synchronize_test_given(
        &self,
        raw_prediction: f64,
        group: usize,
        jitter_noise: f64,
        u: f64,
    ) -> Result<f64, FairError> {
        let own = self.channel(group)?;
        let jittered = raw_prediction + jitter_noise;
        let r = self.randomized_training_cdf(group, jittered, u)?;
        Ok(self.barycenter_at(clamp_rank(r, own.training_jittered.len())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("transformer serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}
