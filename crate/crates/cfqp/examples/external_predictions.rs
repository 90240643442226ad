//! Score interval predictions produced outside this crate (for example by a
//! forest or network quantile regressor): the metrics layer only needs the
//! per-point endpoints, matching the `cfqp eval` subcommand.
//!
//! ```bash
//! cargo run --example external_predictions
//! ```

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cfqp::conformal::PredictionInterval;
use cfqp::metrics::evaluate;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // pretend these came from an external model's prediction file
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 500;
    let mut responses = Vec::with_capacity(n);
    let mut groups = Vec::with_capacity(n);
    let mut lower = Vec::with_capacity(n);
    let mut upper = Vec::with_capacity(n);
    for _ in 0..n {
        let group = usize::from(rng.random::<f64>() < 0.4);
        let base = if group == 1 { 2.0 } else { 0.0 };
        let y = base + 2.0 * rng.random::<f64>() - 1.0;
        // an external band: roughly centered, occasionally too narrow
        let center = base + 0.1 * (rng.random::<f64>() - 0.5);
        let width = 1.6 + 0.4 * rng.random::<f64>();
        responses.push(y);
        groups.push(group);
        lower.push(center - width / 2.0);
        upper.push(center + width / 2.0);
    }
    let intervals: Vec<PredictionInterval> = lower
        .iter()
        .zip(&upper)
        .map(|(&lo, &hi)| PredictionInterval { lower: lo, upper: hi })
        .collect();

    let report = evaluate(&responses, &groups, 2, &lower, &upper, &intervals)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    println!(
        "\nsame shape as `cfqp eval --predictions file.csv` on a\n\
         group,y,lower,upper file"
    );
    Ok(())
}
