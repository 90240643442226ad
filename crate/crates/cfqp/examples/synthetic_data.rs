//! Generate a two-group synthetic benchmark, inspect its group structure,
//! and round-trip it through CSV.
//!
//! ```bash
//! cargo run --example synthetic_data
//! ```

use cfqp::dataset::{
    generate_synthetic, load_csv, partition_by_group, split, write_csv, CsvSchema, NoiseFamily,
    SyntheticConfig,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // group 1 is shifted up by 3 response units and twice as noisy
    let scenario = SyntheticConfig {
        proportions: vec![0.7, 0.3],
        shifts: vec![0.0, 3.0],
        scales: vec![1.0, 2.0],
        feature_dim: 2,
        noise: NoiseFamily::Gaussian,
        coefficients: None,
    };
    let data = generate_synthetic(&scenario, 2000, 7)?;
    println!(
        "generated {} observations, {} features, {} groups",
        data.len(),
        data.feature_dim(),
        data.group_count()
    );

    let all: Vec<usize> = (0..data.len()).collect();
    let partition = partition_by_group(&data, &all)?;
    for group in 0..data.group_count() {
        let members = partition.indices(group);
        let mean: f64 =
            members.iter().map(|&i| data.response(i)).sum::<f64>() / members.len() as f64;
        println!(
            "group {group}: {} members (weight {:.3}), mean response {mean:+.3}",
            members.len(),
            partition.weights()[group]
        );
    }

    let splits = split(&data, 0.5, 42)?;
    println!(
        "seeded 50/50 split: {} proper training, {} calibration",
        splits.proper_training.len(),
        splits.calibration.len()
    );

    let path = std::env::temp_dir().join("cfqp_synthetic_example.csv");
    write_csv(&data, &path, None)?;
    let loaded = load_csv(&path, &CsvSchema::new("group", "y"))?;
    println!(
        "wrote and re-read {} ({} rows survive the round trip)",
        path.display(),
        loaded.dataset.len()
    );
    std::fs::remove_file(&path).ok();
    Ok(())
}
