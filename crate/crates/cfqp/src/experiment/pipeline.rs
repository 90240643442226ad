//! One repetition of the fair conformal pipeline: predict on the calibration
//! set, synchronize, score, calibrate, and band the test points.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::conformal::{
    calibrate_asymmetric, calibrate_symmetric, ConformalCalibration, PredictionInterval,
};
use crate::dataset::{partition_by_group, Dataset, SplitIndices};
use crate::fair::{fit_transformer, FairTransformOptions, FairTransformer, GroupPredictions};
use crate::quantile::{QuantilePair, QuantilePredictor};

use super::ExperimentError;

/// Whether the synchronization step runs or passes raw predictions through.
/// Passthrough reproduces the plain CQR pipeline exactly.
#[derive(Debug, Clone)]
pub enum FairMode {
    Synchronized(FairTransformOptions),
    Passthrough,
}

/// Shared margin at level `alpha`, or independent tail margins.
#[derive(Debug, Clone, Copy)]
pub enum TailMode {
    Symmetric,
    Asymmetric { alpha_lo: f64, alpha_hi: f64 },
}

/// Endpoints, intervals, and calibration for one method on one test set.
#[derive(Debug, Clone)]
pub struct MethodOutput {
    /// Lower endpoints (pre-margin) at the test points.
    pub lower_endpoints: Vec<f64>,
    /// Upper endpoints (pre-margin) at the test points.
    pub upper_endpoints: Vec<f64>,
    pub intervals: Vec<PredictionInterval>,
    pub calibration: ConformalCalibration,
    /// Monotone-rearrangement repairs across the fitted quantile grids.
    pub monotonicity_repairs: usize,
}

/// Runs the fair conformal pipeline for one split.
///
/// With `FairMode::Synchronized` the calibration predictions are synchronized
/// through their own-group calibration ranks, the margin is calibrated on the
/// synchronized endpoints, and each test prediction is synchronized through
/// its randomized training rank (consuming one jitter draw and one tie-break
/// uniform per level, lower level first). With `FairMode::Passthrough` every
/// synchronization is the identity and the output coincides with
/// [`crate::conformal::cqr_baseline`].
#[allow(clippy::too_many_arguments)]
pub fn run_cfqp(
    pair: &QuantilePair,
    data: &Dataset,
    splits: &SplitIndices,
    test: &Dataset,
    alpha: f64,
    fair: &FairMode,
    tails: TailMode,
    tie_break_seed: u64,
) -> Result<MethodOutput, ExperimentError> {
    let cal_lower = pair.lower.predict_indices(data, &splits.calibration)?;
    let cal_upper = pair.upper.predict_indices(data, &splits.calibration)?;
    let cal_responses: Vec<f64> = splits
        .calibration
        .iter()
        .map(|&i| data.response(i))
        .collect();
    let test_indices: Vec<usize> = (0..test.len()).collect();
    let raw_test_lower = pair.lower.predict_indices(test, &test_indices)?;
    let raw_test_upper = pair.upper.predict_indices(test, &test_indices)?;

    let (fair_cal_lower, fair_cal_upper, lower_endpoints, upper_endpoints, repairs) = match fair {
        FairMode::Passthrough => (cal_lower, cal_upper, raw_test_lower, raw_test_upper, 0),
        FairMode::Synchronized(opts) => {
            let transform = SynchronizedTransforms::fit(
                pair, data, splits, &cal_lower, &cal_upper, opts,
            )?;
            let fair_cal_lower = transform.synchronize_calibration_side(&transform.lower)?;
            let fair_cal_upper = transform.synchronize_calibration_side(&transform.upper)?;
            let mut rng = ChaCha8Rng::seed_from_u64(tie_break_seed);
            let mut lower_endpoints = Vec::with_capacity(test.len());
            let mut upper_endpoints = Vec::with_capacity(test.len());
            for i in 0..test.len() {
                let group = test.group(i);
                lower_endpoints.push(transform.lower.synchronize_test(
                    raw_test_lower[i],
                    group,
                    &mut rng,
                )?);
                upper_endpoints.push(transform.upper.synchronize_test(
                    raw_test_upper[i],
                    group,
                    &mut rng,
                )?);
            }
            let repairs = transform.lower.monotonicity_repairs()
                + transform.upper.monotonicity_repairs();
            (
                fair_cal_lower,
                fair_cal_upper,
                lower_endpoints,
                upper_endpoints,
                repairs,
            )
        }
    };

    let calibration = match tails {
        TailMode::Symmetric => {
            calibrate_symmetric(&fair_cal_lower, &fair_cal_upper, &cal_responses, alpha)?
        }
        TailMode::Asymmetric { alpha_lo, alpha_hi } => calibrate_asymmetric(
            &fair_cal_lower,
            &fair_cal_upper,
            &cal_responses,
            alpha_lo,
            alpha_hi,
        )?,
    };
    let intervals = lower_endpoints
        .iter()
        .zip(&upper_endpoints)
        .map(|(&lo, &hi)| calibration.interval(lo, hi))
        .collect();
    Ok(MethodOutput {
        lower_endpoints,
        upper_endpoints,
        intervals,
        calibration,
        monotonicity_repairs: repairs,
    })
}

/// The raw plug-in band `[q_lo, q_hi]` with no synchronization and no
/// conformal margin; the unfair comparator.
pub fn unfair_baseline(
    pair: &QuantilePair,
    test: &Dataset,
    alpha: f64,
) -> Result<MethodOutput, ExperimentError> {
    let test_indices: Vec<usize> = (0..test.len()).collect();
    let lower_endpoints = pair.lower.predict_indices(test, &test_indices)?;
    let upper_endpoints = pair.upper.predict_indices(test, &test_indices)?;
    let intervals = lower_endpoints
        .iter()
        .zip(&upper_endpoints)
        .map(|(&lo, &hi)| PredictionInterval {
            lower: lo,
            upper: hi,
        })
        .collect();
    Ok(MethodOutput {
        lower_endpoints,
        upper_endpoints,
        intervals,
        calibration: ConformalCalibration {
            alpha,
            mode: crate::conformal::CalibrationMode::Symmetric { margin: 0.0 },
        },
        monotonicity_repairs: 0,
    })
}

/// The two per-level transformers plus the bookkeeping needed to map
/// calibration positions to (group, within-group) slots.
struct SynchronizedTransforms {
    lower: FairTransformer,
    upper: FairTransformer,
    /// For each calibration position: its group and its index inside the
    /// group's prediction vector.
    slots: Vec<(usize, usize)>,
}

impl SynchronizedTransforms {
    fn fit(
        pair: &QuantilePair,
        data: &Dataset,
        splits: &SplitIndices,
        cal_lower: &[f64],
        cal_upper: &[f64],
        opts: &FairTransformOptions,
    ) -> Result<Self, ExperimentError> {
        let cal_partition = partition_by_group(data, &splits.calibration)?;
        let train_partition = partition_by_group(data, &splits.proper_training)?;
        let group_count = data.group_count();

        let mut slots = Vec::with_capacity(splits.calibration.len());
        let mut counters = vec![0usize; group_count];
        let mut cal_lower_by_group: Vec<Vec<f64>> = vec![Vec::new(); group_count];
        let mut cal_upper_by_group: Vec<Vec<f64>> = vec![Vec::new(); group_count];
        for (position, &index) in splits.calibration.iter().enumerate() {
            let group = data.group(index);
            slots.push((group, counters[group]));
            counters[group] += 1;
            cal_lower_by_group[group].push(cal_lower[position]);
            cal_upper_by_group[group].push(cal_upper[position]);
        }

        let mut train_lower_by_group = Vec::with_capacity(group_count);
        let mut train_upper_by_group = Vec::with_capacity(group_count);
        for group in 0..group_count {
            let indices = train_partition.indices(group);
            train_lower_by_group.push(pair.lower.predict_indices(data, indices)?);
            train_upper_by_group.push(pair.upper.predict_indices(data, indices)?);
        }

        let build = |cal_by_group: Vec<Vec<f64>>,
                     train_by_group: Vec<Vec<f64>>,
                     level: crate::quantile::QuantileLevel,
                     salt: u64|
         -> Result<FairTransformer, ExperimentError> {
            let predictions: Vec<GroupPredictions> = cal_by_group
                .into_iter()
                .zip(train_by_group)
                .map(|(calibration, training)| GroupPredictions {
                    calibration,
                    training,
                })
                .collect();
            let mut level_opts = opts.clone();
            level_opts.jitter.seed = super::splitmix64(opts.jitter.seed ^ salt);
            Ok(fit_transformer(
                level,
                &predictions,
                cal_partition.weights(),
                &level_opts,
            )?)
        };
        let lower = build(
            cal_lower_by_group,
            train_lower_by_group,
            pair.lower.level,
            1,
        )?;
        let upper = build(
            cal_upper_by_group,
            train_upper_by_group,
            pair.upper.level,
            2,
        )?;
        Ok(SynchronizedTransforms {
            lower,
            upper,
            slots,
        })
    }

    /// Synchronized values for every calibration position, in position order.
    fn synchronize_calibration_side(
        &self,
        transformer: &FairTransformer,
    ) -> Result<Vec<f64>, ExperimentError> {
        let mut out = Vec::with_capacity(self.slots.len());
        for &(group, within) in &self.slots {
            let jittered = transformer.calibration_values(group)?[within];
            out.push(transformer.synchronize_calibration(jittered, group)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, split, SyntheticConfig};
    use crate::fair::{JitterConfig, SmoothingMethod};
    use crate::quantile::{fit_pair, FitOptions};

    #[test]
    fn passthrough_pipeline_equals_cqr_baseline_bitwise() {
        let config = SyntheticConfig::single_group(1.0);
        let data = generate_synthetic(&config, 500, 21).unwrap();
        let test = generate_synthetic(&config, 200, 22).unwrap();
        let indices = split(&data, 0.5, 23).unwrap();
        let all: Vec<usize> = (0..data.len()).collect();
        let _ = all;
        let (pair, _) =
            fit_pair(&data, &indices.proper_training, 0.1, &FitOptions::default(), 0).unwrap();
        let via_pipeline = run_cfqp(
            &pair,
            &data,
            &indices,
            &test,
            0.1,
            &FairMode::Passthrough,
            TailMode::Symmetric,
            99,
        )
        .unwrap();
        let via_baseline = crate::conformal::cqr_baseline(&pair, &data, &indices, &test, 0.1)
            .unwrap();
        for (a, b) in via_pipeline.intervals.iter().zip(&via_baseline.intervals) {
            assert_eq!(a.lower.to_bits(), b.lower.to_bits());
            assert_eq!(a.upper.to_bits(), b.upper.to_bits());
        }
    }

    #[test]
    fn synchronized_pipeline_is_deterministic() {
        let config = SyntheticConfig::two_group([0.0, 2.0], [1.0, 1.5]);
        let data = generate_synthetic(&config, 400, 5).unwrap();
        let test = generate_synthetic(&config, 100, 6).unwrap();
        let indices = split(&data, 0.5, 7).unwrap();
        let (pair, _) =
            fit_pair(&data, &indices.proper_training, 0.1, &FitOptions::default(), 0).unwrap();
        let opts = FairTransformOptions::new(
            JitterConfig::new(1e-6, 11).unwrap(),
            SmoothingMethod::default_kernel(),
        );
        let run = || {
            run_cfqp(
                &pair,
                &data,
                &indices,
                &test,
                0.1,
                &FairMode::Synchronized(opts.clone()),
                TailMode::Symmetric,
                13,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.lower_endpoints, b.lower_endpoints);
        assert_eq!(a.intervals.len(), b.intervals.len());
        for (x, y) in a.intervals.iter().zip(&b.intervals) {
            assert_eq!(x, y);
        }
    }
}
