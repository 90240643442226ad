//! One full split: fair conformal intervals next to the plain CQR baseline
//! and the raw plug-in band.
//!
//! ```bash
//! cargo run --example conformal_interval
//! ```

use cfqp::conformal::{cqr_baseline, PredictionInterval};
use cfqp::dataset::{generate_synthetic, interquartile_range, split, SyntheticConfig};
use cfqp::experiment::{run_cfqp, unfair_baseline, FairMode, TailMode};
use cfqp::fair::{FairTransformOptions, JitterConfig, SmoothingMethod};
use cfqp::metrics::EvaluationReport;
use cfqp::quantile::{fit_pair, FitOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alpha = 0.1;
    let scenario = SyntheticConfig::two_group([0.0, 3.0], [1.0, 2.0]);
    let pool = generate_synthetic(&scenario, 4000, 21)?;
    let test = generate_synthetic(&scenario, 2000, 22)?;
    let splits = split(&pool, 0.5, 23)?;
    let (pair, _) = fit_pair(&pool, &splits.proper_training, alpha, &FitOptions::default(), 0)?;

    let sigma = 1e-6 * interquartile_range(&pool.responses());
    let fair_options = FairTransformOptions::new(
        JitterConfig::new(sigma, 24)?,
        SmoothingMethod::default_kernel(),
    );
    let fair = run_cfqp(
        &pair,
        &pool,
        &splits,
        &test,
        alpha,
        &FairMode::Synchronized(fair_options),
        TailMode::Symmetric,
        25,
    )?;
    let baseline = cqr_baseline(&pair, &pool, &splits, &test, alpha)?;
    let plug_in = unfair_baseline(&pair, &test, alpha)?;

    let responses = test.responses();
    let groups = test.groups();
    let report = |lower: &[f64],
                  upper: &[f64],
                  intervals: &[PredictionInterval]|
     -> Result<EvaluationReport, cfqp::metrics::MetricsError> {
        cfqp::metrics::evaluate(&responses, &groups, test.group_count(), lower, upper, intervals)
    };
    let rows = [
        (
            "cfqp",
            report(&fair.lower_endpoints, &fair.upper_endpoints, &fair.intervals)?,
        ),
        (
            "cqr",
            report(
                &baseline.lower_endpoints,
                &baseline.upper_endpoints,
                &baseline.intervals,
            )?,
        ),
        (
            "unfair",
            report(
                &plug_in.lower_endpoints,
                &plug_in.upper_endpoints,
                &plug_in.intervals,
            )?,
        ),
    ];
    println!(
        "{:<10} {:>9} {:>12} {:>8} {:>8}",
        "method", "coverage", "mean length", "KS(lo)", "KS(hi)"
    );
    for (name, row) in &rows {
        println!(
            "{:<10} {:>9.4} {:>12.3} {:>8.3} {:>8.3}",
            name, row.coverage, row.mean_length, row.ks_lo, row.ks_hi
        );
    }

    println!("\nfirst three test points:");
    for i in 0..3 {
        println!(
            "  group {}: y = {:+.3}, cfqp [{:+.3}, {:+.3}], cqr [{:+.3}, {:+.3}]",
            test.group(i),
            test.response(i),
            fair.intervals[i].lower,
            fair.intervals[i].upper,
            baseline.intervals[i].lower,
            baseline.intervals[i].upper,
        );
    }
    Ok(())
}
