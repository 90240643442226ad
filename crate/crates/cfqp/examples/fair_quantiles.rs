//! Remove the group dependence of quantile predictions: fit the functional
//! synchronization transform and compare the endpoint distributions before
//! and after.
//!
//! ```bash
//! cargo run --example fair_quantiles
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cfqp::dataset::{generate_synthetic, partition_by_group, split, SyntheticConfig};
use cfqp::fair::{
    fit_transformer, FairTransformOptions, GroupPredictions, JitterConfig, SmoothingMethod,
};
use cfqp::metrics::ks_unfairness;
use cfqp::quantile::{fit_pair, FitOptions, QuantilePredictor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // a strong group shift: raw quantile predictions are blatantly unfair
    let scenario = SyntheticConfig::two_group([0.0, 3.0], [1.0, 1.0]);
    let data = generate_synthetic(&scenario, 4000, 3)?;
    let test = generate_synthetic(&scenario, 2000, 4)?;
    let splits = split(&data, 0.5, 5)?;
    let (pair, _) = fit_pair(&data, &splits.proper_training, 0.1, &FitOptions::default(), 0)?;

    // per-group predictions at the lower level on calibration and training
    let cal_partition = partition_by_group(&data, &splits.calibration)?;
    let train_partition = partition_by_group(&data, &splits.proper_training)?;
    let mut predictions = Vec::new();
    for group in 0..data.group_count() {
        predictions.push(GroupPredictions {
            calibration: pair.lower.predict_indices(&data, cal_partition.indices(group))?,
            training: pair.lower.predict_indices(&data, train_partition.indices(group))?,
        });
    }
    let options = FairTransformOptions::new(
        JitterConfig::new(1e-6, 99)?,
        SmoothingMethod::default_kernel(),
    );
    let transformer = fit_transformer(
        pair.lower.level,
        &predictions,
        cal_partition.weights(),
        &options,
    )?;
    println!(
        "fitted transformer: {} groups, weights {:?}, {} monotonicity repairs",
        transformer.group_count(),
        transformer.weights(),
        transformer.monotonicity_repairs()
    );

    // synchronize fresh test predictions and measure the fairness gap
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut raw = Vec::with_capacity(test.len());
    let mut fair = Vec::with_capacity(test.len());
    for i in 0..test.len() {
        let prediction = pair.lower.predict_one(test.features(i), test.group(i))?;
        raw.push(prediction);
        fair.push(transformer.synchronize_test(prediction, test.group(i), &mut rng)?);
    }
    let groups = test.groups();
    let ks_raw = ks_unfairness(&raw, &groups, test.group_count())?;
    let ks_fair = ks_unfairness(&fair, &groups, test.group_count())?;
    println!("lower-endpoint KS unfairness: raw {ks_raw:.3} -> synchronized {ks_fair:.3}");

    // the transform is a monotone map per group: ordering is preserved
    let sample = transformer.calibration_values(0)?;
    let first = transformer.synchronize_calibration(sample[0], 0)?;
    println!(
        "example calibration value {:.3} (group 0) maps to {:.3}",
        sample[0], first
    );
    Ok(())
}
