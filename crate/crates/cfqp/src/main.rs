//! Experiment CLI: `run` (repeated-split experiments from a config file),
//! `synth` (emit a synthetic CSV), `eval` (metrics on precomputed prediction
//! files). Exit codes: 0 success, 1 validation error, 2 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use cfqp::conformal::PredictionInterval;
use cfqp::dataset::{generate_synthetic, write_csv, NoiseFamily, SyntheticConfig};
use cfqp::experiment::{run_experiment, validate_config, Method, Overrides, SigmaRule};

const USAGE: &str = "\
cfqp — demographic-parity-fair conformal quantile prediction

USAGE:
  cfqp run --config FILE [overrides]
  cfqp synth --out FILE [scenario flags]
  cfqp eval --predictions FILE [--out FILE]
  cfqp help

RUN (repeated-split experiment; flags override config values):
  --config FILE                flat `key = value` config file (required)
  --alpha X                    miscoverage level in (0, 1)
  --repetitions N              number of repeated splits
  --base-seed N                base seed; repetition r uses base + r
  --output-dir DIR             where CSVs and summary.json land
  --methods a,b                subset of cfqp,cqr,unfair
  --calibration-fraction X     train/calibration split fraction
  --test-fraction X            held-out test fraction (CSV sources)
  --sigma X|auto               jitter scale (auto = 1e-6 * response IQR)

  Config keys: source (synthetic|csv), alpha, alpha_lo/alpha_hi, smoothing
  (empirical|kernel|local_linear), kernel (triangular|gaussian), bandwidth
  (auto|X), radius (auto|X), sigma (auto|X), grid_size, repetitions,
  calibration_fraction, test_fraction, base_seed, methods, output_dir,
  min_group_size; csv: csv_path, group_column, response_column,
  feature_columns, delimiter; synthetic: proportions, shifts, scales,
  feature_dim, noise (gaussian|lognormal), coefficients, n_train, n_cal,
  n_test. Lines starting with # are comments.

SYNTH (write a synthetic dataset as CSV):
  --out FILE                   output path (required)
  --n N                        rows (default 1000)
  --seed N                     generator seed (default 0)
  --proportions a,b            group proportions (default 0.5,0.5)
  --shifts a,b                 per-group location shifts (default 0,0)
  --scales a,b                 per-group noise scales (default 1,1)
  --feature-dim N              feature count (default 1)
  --noise gaussian|lognormal   noise family (default gaussian)

EVAL (metrics on precomputed intervals, e.g. from an external regressor):
  --predictions FILE           CSV with header group,y,lower,upper (required)
  --alpha X                    nominal miscoverage to record (default 0.1)
  --out FILE                   write the report JSON here instead of stdout
";

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    match args.first().map(String::as_str) {
        Some("run") => run_command(&args[1..]),
        Some("synth") => synth_command(&args[1..]),
        Some("eval") => eval_command(&args[1..]),
        Some("help") | Some("--help") | Some("-h") => {
            print!("{USAGE}");
            ExitCode::SUCCESS
        }
        Some(other) => {
            eprintln!("unknown subcommand {other:?}\n\n{USAGE}");
            ExitCode::from(1)
        }
        None => {
            eprint!("{USAGE}");
            ExitCode::from(1)
        }
    }
}

struct Flags {
    values: Vec<(String, String)>,
}

impl Flags {
    fn parse(args: &[String]) -> Result<Self, String> {
        let mut values = Vec::new();
        let mut iter = args.iter();
        while let Some(flag) = iter.next() {
            let Some(name) = flag.strip_prefix("--") else {
                return Err(format!("expected a --flag, got {flag:?}"));
            };
            let value = iter
                .next()
                .ok_or_else(|| format!("missing value for --{name}"))?;
            values.push((name.to_string(), value.clone()));
        }
        Ok(Flags { values })
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.values
            .iter()
            .rev()
            .find(|(key, _)| key == name)
            .map(|(_, value)| value.as_str())
    }

    fn parse_number<T: std::str::FromStr>(&self, name: &str) -> Result<Option<T>, String> {
        match self.get(name) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("cannot parse --{name} value {raw:?}")),
        }
    }

    fn parse_list(&self, name: &str) -> Result<Option<Vec<f64>>, String> {
        match self.get(name) {
            None => Ok(None),
            Some(raw) => raw
                .split(',')
                .map(|token| {
                    token
                        .trim()
                        .parse::<f64>()
                        .map_err(|_| format!("cannot parse --{name} value {raw:?}"))
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }
}

fn run_command(args: &[String]) -> ExitCode {
    let flags = match Flags::parse(args) {
        Ok(flags) => flags,
        Err(message) => return validation_failure(&message),
    };
    let Some(config_path) = flags.get("config") else {
        return validation_failure("run requires --config FILE");
    };
    let mut config = match validate_config(config_path) {
        Ok(config) => config,
        Err(error) => return validation_failure(&error.to_string()),
    };
    let overrides = match build_overrides(&flags) {
        Ok(overrides) => overrides,
        Err(message) => return validation_failure(&message),
    };
    if let Err(error) = overrides.apply(&mut config) {
        return validation_failure(&error.to_string());
    }
    match run_experiment(&config) {
        Ok(outcome) => {
            print!("{}", outcome.summary.to_table());
            println!("summary: {}", outcome.summary_path.display());
            for (method, path) in &outcome.csv_paths {
                println!("{method}: {}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(error) => {
            eprintln!("experiment failed: {error}");
            ExitCode::from(2)
        }
    }
}

fn build_overrides(flags: &Flags) -> Result<Overrides, String> {
    let methods = match flags.get("methods") {
        None => None,
        Some(raw) => {
            let mut methods = Vec::new();
            for token in raw.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                match token {
                    "cfqp" => methods.push(Method::Cfqp),
                    "cqr" => methods.push(Method::Cqr),
                    "unfair" => methods.push(Method::Unfair),
                    other => return Err(format!("unknown method {other:?}")),
                }
            }
            Some(methods)
        }
    };
    let sigma = match flags.get("sigma") {
        None => None,
        Some("auto") => Some(SigmaRule::Auto),
        Some(raw) => Some(SigmaRule::Fixed(
            raw.parse::<f64>()
                .map_err(|_| format!("cannot parse --sigma value {raw:?}"))?,
        )),
    };
    Ok(Overrides {
        alpha: flags.parse_number("alpha")?,
        repetitions: flags.parse_number("repetitions")?,
        base_seed: flags.parse_number("base-seed")?,
        output_dir: flags.get("output-dir").map(PathBuf::from),
        methods,
        calibration_fraction: flags.parse_number("calibration-fraction")?,
        test_fraction: flags.parse_number("test-fraction")?,
        sigma,
    })
}

fn synth_command(args: &[String]) -> ExitCode {
    let flags = match Flags::parse(args) {
        Ok(flags) => flags,
        Err(message) => return validation_failure(&message),
    };
    let Some(out) = flags.get("out") else {
        return validation_failure("synth requires --out FILE");
    };
    let n = match flags.parse_number::<usize>("n") {
        Ok(value) => value.unwrap_or(1000),
        Err(message) => return validation_failure(&message),
    };
    let seed = match flags.parse_number::<u64>("seed") {
        Ok(value) => value.unwrap_or(0),
        Err(message) => return validation_failure(&message),
    };
    let proportions = match flags.parse_list("proportions") {
        Ok(value) => value.unwrap_or_else(|| vec![0.5, 0.5]),
        Err(message) => return validation_failure(&message),
    };
    let k = proportions.len();
    let shifts = match flags.parse_list("shifts") {
        Ok(value) => value.unwrap_or_else(|| vec![0.0; k]),
        Err(message) => return validation_failure(&message),
    };
    let scales = match flags.parse_list("scales") {
        Ok(value) => value.unwrap_or_else(|| vec![1.0; k]),
        Err(message) => return validation_failure(&message),
    };
    let feature_dim = match flags.parse_number::<usize>("feature-dim") {
        Ok(value) => value.unwrap_or(1),
        Err(message) => return validation_failure(&message),
    };
    let noise = match flags.get("noise") {
        None | Some("gaussian") => NoiseFamily::Gaussian,
        Some("lognormal") => NoiseFamily::Lognormal,
        Some(other) => {
            return validation_failure(&format!(
                "noise must be gaussian or lognormal, got {other:?}"
            ))
        }
    };
    let config = SyntheticConfig {
        proportions,
        shifts,
        scales,
        feature_dim,
        noise,
        coefficients: None,
    };
    let data = match generate_synthetic(&config, n, seed) {
        Ok(data) => data,
        Err(error) => return validation_failure(&error.to_string()),
    };
    match write_csv(&data, out, None) {
        Ok(()) => {
            println!(
                "wrote {} rows ({} group(s), {} feature(s)) to {out}",
                data.len(),
                data.group_count(),
                data.feature_dim()
            );
            ExitCode::SUCCESS
        }
        Err(error) => {
            eprintln!("failed to write {out}: {error}");
            ExitCode::from(2)
        }
    }
}

fn eval_command(args: &[String]) -> ExitCode {
    let flags = match Flags::parse(args) {
        Ok(flags) => flags,
        Err(message) => return validation_failure(&message),
    };
    let Some(path) = flags.get("predictions") else {
        return validation_failure("eval requires --predictions FILE");
    };
    let alpha = match flags.parse_number::<f64>("alpha") {
        Ok(value) => value.unwrap_or(0.1),
        Err(message) => return validation_failure(&message),
    };
    if !(alpha > 0.0 && alpha < 1.0) {
        return validation_failure(&format!("--alpha must lie inside (0, 1), got {alpha}"));
    }
    let parsed = match read_prediction_file(path) {
        Ok(parsed) => parsed,
        Err(message) => return validation_failure(&message),
    };
    let intervals: Vec<PredictionInterval> = parsed
        .lower
        .iter()
        .zip(&parsed.upper)
        .map(|(&lo, &hi)| PredictionInterval {
            lower: lo,
            upper: hi,
        })
        .collect();
    let report = match cfqp::metrics::evaluate(
        &parsed.responses,
        &parsed.groups,
        parsed.group_count,
        &parsed.lower,
        &parsed.upper,
        &intervals,
    ) {
        Ok(report) => report,
        Err(error) => {
            eprintln!("evaluation failed: {error}");
            return ExitCode::from(2);
        }
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    match flags.get("out") {
        Some(out) => match std::fs::write(out, json) {
            Ok(()) => {
                println!("wrote report to {out}");
                ExitCode::SUCCESS
            }
            Err(error) => {
                eprintln!("failed to write {out}: {error}");
                ExitCode::from(2)
            }
        },
        None => {
            println!("{json}");
            ExitCode::SUCCESS
        }
    }
}

struct PredictionFile {
    responses: Vec<f64>,
    groups: Vec<usize>,
    group_count: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Reads `group,y,lower,upper` rows; group labels are re-encoded densely in
/// order of first appearance, mirroring dataset CSV ingestion.
fn read_prediction_file(path: &str) -> Result<PredictionFile, String> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| format!("cannot read {path}: {e}"))?;
    let headers = reader
        .headers()
        .map_err(|e| format!("cannot read {path}: {e}"))?
        .clone();
    let index_of = |name: &str| -> Result<usize, String> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| format!("{path} is missing required column {name:?}"))
    };
    let group_idx = index_of("group")?;
    let y_idx = index_of("y")?;
    let lower_idx = index_of("lower")?;
    let upper_idx = index_of("upper")?;
    let mut labels: Vec<String> = Vec::new();
    let mut parsed = PredictionFile {
        responses: Vec::new(),
        groups: Vec::new(),
        group_count: 0,
        lower: Vec::new(),
        upper: Vec::new(),
    };
    for (row_number, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format!("cannot read {path}: {e}"))?;
        let field = |idx: usize, name: &str| -> Result<f64, String> {
            let raw = record.get(idx).unwrap_or("").trim();
            raw.parse::<f64>().map_err(|_| {
                format!(
                    "cannot parse column {name:?} at data row {}: {raw:?}",
                    row_number + 1
                )
            })
        };
        let raw_group = record.get(group_idx).unwrap_or("").trim().to_string();
        let group = match labels.iter().position(|l| *l == raw_group) {
            Some(index) => index,
            None => {
                labels.push(raw_group);
                labels.len() - 1
            }
        };
        parsed.groups.push(group);
        parsed.responses.push(field(y_idx, "y")?);
        parsed.lower.push(field(lower_idx, "lower")?);
        parsed.upper.push(field(upper_idx, "upper")?);
    }
    if parsed.responses.is_empty() {
        return Err(format!("{path} contains no data rows"));
    }
    parsed.group_count = labels.len();
    Ok(parsed)
}

fn validation_failure(message: &str) -> ExitCode {
    eprintln!("{message}");
    eprintln!("run `cfqp help` for usage");
    ExitCode::from(1)
}
