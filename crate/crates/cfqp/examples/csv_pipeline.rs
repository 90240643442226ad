//! Run the experiment harness on a CSV source: synthesize a file, then point
//! the config at it with held-out test splitting.
//!
//! ```bash
//! cargo run --example csv_pipeline
//! ```

use cfqp::dataset::{generate_synthetic, write_csv, SyntheticConfig};
use cfqp::experiment::{parse_config_str, run_experiment};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("cfqp_csv_pipeline");
    std::fs::create_dir_all(&dir)?;
    let csv_path = dir.join("wages.csv");

    // stand-in for a real dataset: two groups, the second shifted and noisier
    let scenario = SyntheticConfig::two_group([0.0, 2.0], [1.0, 1.5]);
    let data = generate_synthetic(&scenario, 3000, 99)?;
    write_csv(&data, &csv_path, None)?;
    println!("wrote {} rows to {}", data.len(), csv_path.display());

    // every repetition re-splits: 20% held-out test, then a 50/50
    // train/calibration split of the remainder
    let config = parse_config_str(&format!(
        "source = csv\n\
         csv_path = {}\n\
         group_column = group\n\
         response_column = y\n\
         alpha = 0.1\n\
         repetitions = 10\n\
         test_fraction = 0.2\n\
         calibration_fraction = 0.5\n\
         methods = cfqp,cqr\n\
         base_seed = 3\n\
         output_dir = {}\n",
        csv_path.display(),
        dir.display()
    ))?;
    let outcome = run_experiment(&config)?;
    print!("{}", outcome.summary.to_table());
    println!("outputs in {}", dir.display());
    Ok(())
}
