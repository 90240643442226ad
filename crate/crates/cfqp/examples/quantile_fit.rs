//! Fit linear quantile regressors with the pinball loss and inspect the
//! fitted pair.
//!
//! ```bash
//! cargo run --example quantile_fit
//! ```

use cfqp::dataset::{generate_synthetic, SyntheticConfig};
use cfqp::quantile::{fit_pair, pinball_loss, FitOptions, QuantileLevel, QuantilePredictor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // the pinball loss is asymmetric: at level 0.9 undershooting costs nine
    // times as much as overshooting
    let level = QuantileLevel::new(0.9)?;
    println!(
        "pinball(y=2, q=1, a=0.9) = {:.2}   pinball(y=0, q=1, a=0.9) = {:.2}",
        pinball_loss(2.0, 1.0, level),
        pinball_loss(0.0, 1.0, level)
    );

    let scenario = SyntheticConfig::two_group([0.0, 2.0], [1.0, 1.5]);
    let data = generate_synthetic(&scenario, 3000, 11)?;
    let indices: Vec<usize> = (0..data.len()).collect();

    // miscoverage 0.1 fits the 5% and 95% conditional quantiles
    let (pair, reports) = fit_pair(&data, &indices, 0.1, &FitOptions::default(), 0)?;
    println!(
        "lower level {:.2}: objective {:.4}, {} iterations, converged: {}",
        pair.lower.level.value(),
        reports.lower.final_objective,
        reports.lower.iterations,
        reports.lower.converged
    );
    println!(
        "upper level {:.2}: objective {:.4}, {} iterations, converged: {}",
        pair.upper.level.value(),
        reports.upper.final_objective,
        reports.upper.iterations,
        reports.upper.converged
    );
    for warning in reports.lower.warnings.iter().chain(&reports.upper.warnings) {
        println!("warning: {warning}");
    }

    for (x, group) in [(0.0, 0), (0.0, 1), (1.0, 0)] {
        let lo = pair.lower.predict_one(&[x], group)?;
        let hi = pair.upper.predict_one(&[x], group)?;
        println!("x = {x:+.1}, group {group}: plug-in band [{lo:+.3}, {hi:+.3}]");
    }

    // models serialize for later reuse
    let json = pair.lower.to_json();
    let restored = cfqp::quantile::LinearQuantileModel::from_json(&json)?;
    println!(
        "serialized lower model round-trips: {}",
        restored == pair.lower
    );
    Ok(())
}
