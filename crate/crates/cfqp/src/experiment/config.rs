//! Experiment configuration: a flat `key = value` text format with defaults,
//! exhaustive validation, and CLI flag overrides (flags win).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{CsvSchema, NoiseFamily, SyntheticConfig};
use crate::fair::{Bandwidth, KernelKind, SmoothingMethod};

/// All validation problems found in a configuration, collected rather than
/// reported one at a time.
#[derive(Debug, Error)]
pub struct ConfigError {
    pub issues: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for issue in &self.issues {
            writeln!(f, "  - {issue}")?;
        }
        Ok(())
    }
}

/// Which pipelines to run and report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Cfqp,
    Cqr,
    Unfair,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Cfqp => "cfqp",
            Method::Cqr => "cqr",
            Method::Unfair => "unfair",
        }
    }
}

/// Jitter scale: a fixed value or the default rule of 1e-6 times the
/// interquartile range of the training-pool responses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaRule {
    Auto,
    Fixed(f64),
}

/// Where the data comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum DataSource {
    Csv {
        path: PathBuf,
        schema: CsvSchema,
    },
    Synthetic {
        scenario: SyntheticConfig,
        n_train: usize,
        n_cal: usize,
        n_test: usize,
    },
}

/// Fully resolved experiment settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub source: DataSource,
    pub alpha: f64,
    /// Optional explicit (lower, upper) levels; defaults to
    /// `(alpha / 2, 1 - alpha / 2)`.
    pub levels: Option<(f64, f64)>,
    pub smoothing: SmoothingMethod,
    pub sigma: SigmaRule,
    pub grid_size: usize,
    pub repetitions: usize,
    pub calibration_fraction: f64,
    /// Held-out test fraction, used for CSV sources.
    pub test_fraction: f64,
    pub base_seed: u64,
    pub methods: Vec<Method>,
    pub output_dir: PathBuf,
    /// Groups smaller than this trigger a warning.
    pub min_group_size: usize,
}

const KNOWN_KEYS: &[&str] = &[
    "source",
    "alpha",
    "alpha_lo",
    "alpha_hi",
    "smoothing",
    "kernel",
    "bandwidth",
    "radius",
    "sigma",
    "grid_size",
    "repetitions",
    "calibration_fraction",
    "test_fraction",
    "base_seed",
    "methods",
    "output_dir",
    "min_group_size",
    "csv_path",
    "group_column",
    "response_column",
    "feature_columns",
    "delimiter",
    "proportions",
    "shifts",
    "scales",
    "feature_dim",
    "noise",
    "coefficients",
    "n_train",
    "n_cal",
    "n_test",
];

/// Reads, parses, and fully validates a configuration file, filling defaults.
pub fn validate_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        issues: vec![format!("cannot read {}: {e}", path.display())],
    })?;
    parse_config_str(&text)
}

/// As [`validate_config`] but over in-memory text.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut issues = Vec::new();
    let mut entries: BTreeMap<String, String> = BTreeMap::new();
    for (number, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match line.split_once('=') {
            Some((key, value)) => {
                let key = key.trim().to_string();
                if !KNOWN_KEYS.contains(&key.as_str()) {
                    match closest_key(&key) {
                        Some(suggestion) => issues.push(format!(
                            "line {}: unknown key {key:?}; did you mean {suggestion:?}?",
                            number + 1
                        )),
                        None => {
                            issues.push(format!("line {}: unknown key {key:?}", number + 1))
                        }
                    }
                    continue;
                }
                if entries.insert(key.clone(), value.trim().to_string()).is_some() {
                    issues.push(format!("line {}: duplicate key {key:?}", number + 1));
                }
            }
            None => issues.push(format!(
                "line {}: expected `key = value`, got {line:?}",
                number + 1
            )),
        }
    }
    match build_config(&entries, &mut issues) {
        Some(config) if issues.is_empty() => Ok(config),
        _ => Err(ConfigError { issues }),
    }
}

fn build_config(
    entries: &BTreeMap<String, String>,
    issues: &mut Vec<String>,
) -> Option<ExperimentConfig> {
    let take = |key: &str| entries.get(key).cloned();

    let alpha = match take("alpha") {
        Some(raw) => parse_number(&raw, "alpha", issues).unwrap_or(f64::NAN),
        None => {
            issues.push("missing required key \"alpha\"".to_string());
            f64::NAN
        }
    };
    if !(alpha > 0.0 && alpha < 1.0) {
        issues.push(format!("alpha must lie strictly inside (0, 1), got {alpha}"));
    }

    let levels = match (take("alpha_lo"), take("alpha_hi")) {
        (None, None) => None,
        (Some(lo), Some(hi)) => {
            let lo = parse_number(&lo, "alpha_lo", issues).unwrap_or(f64::NAN);
            let hi = parse_number(&hi, "alpha_hi", issues).unwrap_or(f64::NAN);
            if !(lo > 0.0 && lo < hi && hi < 1.0) {
                issues.push(format!(
                    "quantile levels must satisfy 0 < alpha_lo < alpha_hi < 1, got ({lo}, {hi})"
                ));
            }
            Some((lo, hi))
        }
        _ => {
            issues.push("alpha_lo and alpha_hi must be given together".to_string());
            None
        }
    };

    let bandwidth = match take("bandwidth").as_deref() {
        None | Some("auto") => Bandwidth::SampleSizeRule,
        Some(raw) => match parse_number(raw, "bandwidth", issues) {
            Some(h) => Bandwidth::Fixed(h),
            None => Bandwidth::SampleSizeRule,
        },
    };
    let radius = match take("radius").as_deref() {
        None | Some("auto") => Bandwidth::SampleSizeRule,
        Some(raw) => match parse_number(raw, "radius", issues) {
            Some(r) => Bandwidth::Fixed(r),
            None => Bandwidth::SampleSizeRule,
        },
    };
    let kernel = match take("kernel").as_deref() {
        None | Some("triangular") => KernelKind::Triangular,
        Some("gaussian") => KernelKind::Gaussian,
        Some(other) => {
            issues.push(format!(
                "kernel must be \"triangular\" or \"gaussian\", got {other:?}"
            ));
            KernelKind::Triangular
        }
    };
    let smoothing = match take("smoothing").as_deref() {
        None | Some("kernel") => SmoothingMethod::Kernel { bandwidth, kernel },
        Some("empirical") => SmoothingMethod::Empirical,
        Some("local_linear") => SmoothingMethod::LocalLinear { radius },
        Some(other) => {
            issues.push(format!(
                "smoothing must be \"empirical\", \"kernel\", or \"local_linear\", got {other:?}"
            ));
            SmoothingMethod::Empirical
        }
    };

    let sigma = match take("sigma").as_deref() {
        None | Some("auto") => SigmaRule::Auto,
        Some(raw) => match parse_number(raw, "sigma", issues) {
            Some(v) if v >= 0.0 => SigmaRule::Fixed(v),
            Some(v) => {
                issues.push(format!("sigma must be non-negative, got {v}"));
                SigmaRule::Auto
            }
            None => SigmaRule::Auto,
        },
    };

    let grid_size = parse_or_default(entries, "grid_size", 1024usize, issues);
    if grid_size < 16 {
        issues.push(format!("grid_size must be at least 16, got {grid_size}"));
    }
    let repetitions = parse_or_default(entries, "repetitions", 200usize, issues);
    if repetitions == 0 {
        issues.push("repetitions must be at least 1".to_string());
    }
    let calibration_fraction =
        parse_or_default(entries, "calibration_fraction", 0.5f64, issues);
    if !(calibration_fraction > 0.0 && calibration_fraction < 1.0) {
        issues.push(format!(
            "calibration_fraction must lie strictly inside (0, 1), got {calibration_fraction}"
        ));
    }
    let test_fraction = parse_or_default(entries, "test_fraction", 0.2f64, issues);
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        issues.push(format!(
            "test_fraction must lie strictly inside (0, 1), got {test_fraction}"
        ));
    }
    let base_seed = parse_or_default(entries, "base_seed", 0u64, issues);
    let min_group_size = parse_or_default(entries, "min_group_size", 10usize, issues);

    let methods = match take("methods") {
        None => vec![Method::Cfqp, Method::Cqr],
        Some(raw) => {
            let mut methods = Vec::new();
            for token in raw.split(',').map(str::trim).filter(|t| !t.is_empty()) {
                match token {
                    "cfqp" => methods.push(Method::Cfqp),
                    "cqr" => methods.push(Method::Cqr),
                    "unfair" => methods.push(Method::Unfair),
                    other => issues.push(format!(
                        "methods must be drawn from cfqp, cqr, unfair; got {other:?}"
                    )),
                }
            }
            if methods.is_empty() {
                issues.push("methods must name at least one method".to_string());
            }
            methods.dedup();
            methods
        }
    };

    let output_dir = PathBuf::from(
        take("output_dir").unwrap_or_else(|| "cfqp_output".to_string()),
    );

    let source = resolve_source(entries, issues);

    if !issues.is_empty() {
        return None;
    }
    Some(ExperimentConfig {
        source: source?,
        alpha,
        levels,
        smoothing,
        sigma,
        grid_size,
        repetitions,
        calibration_fraction,
        test_fraction,
        base_seed,
        methods,
        output_dir,
        min_group_size,
    })
}

fn resolve_source(
    entries: &BTreeMap<String, String>,
    issues: &mut Vec<String>,
) -> Option<DataSource> {
    let declared = entries.get("source").map(String::as_str);
    let has_csv = entries.contains_key("csv_path");
    let has_synthetic = entries.contains_key("proportions") || entries.contains_key("n_train");
    let kind = match declared {
        Some("csv") => "csv",
        Some("synthetic") => "synthetic",
        Some(other) => {
            issues.push(format!(
                "source must be \"csv\" or \"synthetic\", got {other:?}"
            ));
            return None;
        }
        None => match (has_csv, has_synthetic) {
            (true, false) => "csv",
            (false, true) => "synthetic",
            (true, true) => {
                issues.push(
                    "exactly one data source may be configured, found both csv and synthetic keys"
                        .to_string(),
                );
                return None;
            }
            (false, false) => {
                issues.push("no data source configured (csv_path or synthetic keys)".to_string());
                return None;
            }
        },
    };
    if kind == "csv" && has_synthetic {
        issues.push("exactly one data source may be configured, found synthetic keys with a csv source".to_string());
    }
    if kind == "synthetic" && has_csv {
        issues.push("exactly one data source may be configured, found csv_path with a synthetic source".to_string());
    }
    match kind {
        "csv" => {
            let path = match entries.get("csv_path") {
                Some(p) => PathBuf::from(p),
                None => {
                    issues.push("csv source requires csv_path".to_string());
                    return None;
                }
            };
            if !path.exists() {
                issues.push(format!("csv_path {} does not exist", path.display()));
            }
            let group_column = entries.get("group_column").cloned().unwrap_or_else(|| {
                issues.push("csv source requires group_column".to_string());
                String::new()
            });
            let response_column = entries.get("response_column").cloned().unwrap_or_else(|| {
                issues.push("csv source requires response_column".to_string());
                String::new()
            });
            let mut schema = CsvSchema::new(group_column, response_column);
            if let Some(raw) = entries.get("feature_columns") {
                schema.feature_columns = Some(
                    raw.split(',')
                        .map(str::trim)
                        .filter(|t| !t.is_empty())
                        .map(String::from)
                        .collect(),
                );
            }
            if let Some(raw) = entries.get("delimiter") {
                match raw.as_bytes() {
                    [byte] => schema.delimiter = *byte,
                    _ => issues.push(format!("delimiter must be a single byte, got {raw:?}")),
                }
            }
            Some(DataSource::Csv { path, schema })
        }
        _ => {
            let proportions = parse_list(entries, "proportions", issues)
                .unwrap_or_else(|| vec![0.5, 0.5]);
            let k = proportions.len();
            let shifts =
                parse_list(entries, "shifts", issues).unwrap_or_else(|| vec![0.0; k]);
            let scales =
                parse_list(entries, "scales", issues).unwrap_or_else(|| vec![1.0; k]);
            let feature_dim = parse_or_default(entries, "feature_dim", 1usize, issues);
            let noise = match entries.get("noise").map(String::as_str) {
                None | Some("gaussian") => NoiseFamily::Gaussian,
                Some("lognormal") => NoiseFamily::Lognormal,
                Some(other) => {
                    issues.push(format!(
                        "noise must be \"gaussian\" or \"lognormal\", got {other:?}"
                    ));
                    NoiseFamily::Gaussian
                }
            };
            let coefficients = match entries.get("coefficients") {
                Some(_) => parse_list(entries, "coefficients", issues),
                None => None,
            };
            let n_train = parse_or_default(entries, "n_train", 1000usize, issues);
            let n_cal = parse_or_default(entries, "n_cal", 1000usize, issues);
            let n_test = parse_or_default(entries, "n_test", 2000usize, issues);
            for (key, value) in [("n_train", n_train), ("n_cal", n_cal), ("n_test", n_test)] {
                if value == 0 {
                    issues.push(format!("{key} must be positive"));
                }
            }
            let scenario = SyntheticConfig {
                proportions,
                shifts,
                scales,
                feature_dim,
                noise,
                coefficients,
            };
            // surface scenario problems (proportions, scales) at validation
            // time instead of at the first repetition
            if let Err(e) = crate::dataset::generate_synthetic(&scenario, 1, 0) {
                issues.push(format!("synthetic scenario invalid: {e}"));
            }
            Some(DataSource::Synthetic {
                scenario,
                n_train,
                n_cal,
                n_test,
            })
        }
    }
}

/// CLI flag overrides; every set field wins over the file value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub alpha: Option<f64>,
    pub repetitions: Option<usize>,
    pub base_seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub methods: Option<Vec<Method>>,
    pub calibration_fraction: Option<f64>,
    pub test_fraction: Option<f64>,
    pub sigma: Option<SigmaRule>,
}

impl Overrides {
    pub fn apply(&self, config: &mut ExperimentConfig) -> Result<(), ConfigError> {
        let mut issues = Vec::new();
        if let Some(alpha) = self.alpha {
            if alpha > 0.0 && alpha < 1.0 {
                config.alpha = alpha;
            } else {
                issues.push(format!("--alpha must lie strictly inside (0, 1), got {alpha}"));
            }
        }
        if let Some(repetitions) = self.repetitions {
            if repetitions >= 1 {
                config.repetitions = repetitions;
            } else {
                issues.push("--repetitions must be at least 1".to_string());
            }
        }
        if let Some(fraction) = self.calibration_fraction {
            if fraction > 0.0 && fraction < 1.0 {
                config.calibration_fraction = fraction;
            } else {
                issues.push(format!(
                    "--calibration-fraction must lie strictly inside (0, 1), got {fraction}"
                ));
            }
        }
        if let Some(fraction) = self.test_fraction {
            if fraction > 0.0 && fraction < 1.0 {
                config.test_fraction = fraction;
            } else {
                issues.push(format!(
                    "--test-fraction must lie strictly inside (0, 1), got {fraction}"
                ));
            }
        }
        if let Some(seed) = self.base_seed {
            config.base_seed = seed;
        }
        if let Some(dir) = &self.output_dir {
            config.output_dir = dir.clone();
        }
        if let Some(methods) = &self.methods {
            config.methods = methods.clone();
        }
        if let Some(sigma) = self.sigma {
            config.sigma = sigma;
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { issues })
        }
    }
}

fn parse_number(raw: &str, key: &str, issues: &mut Vec<String>) -> Option<f64> {
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Some(v),
        _ => {
            issues.push(format!("{key} must be a finite number, got {raw:?}"));
            None
        }
    }
}

fn parse_list(
    entries: &BTreeMap<String, String>,
    key: &str,
    issues: &mut Vec<String>,
) -> Option<Vec<f64>> {
    let raw = entries.get(key)?;
    let mut out = Vec::new();
    for token in raw.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        match token.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            _ => {
                issues.push(format!("{key} must be a comma list of numbers, got {token:?}"));
                return None;
            }
        }
    }
    if out.is_empty() {
        issues.push(format!("{key} must not be empty"));
        return None;
    }
    Some(out)
}

fn parse_or_default<T: std::str::FromStr + Copy>(
    entries: &BTreeMap<String, String>,
    key: &str,
    default: T,
    issues: &mut Vec<String>,
) -> T {
    match entries.get(key) {
        None => default,
        Some(raw) => match raw.parse::<T>() {
            Ok(v) => v,
            Err(_) => {
                issues.push(format!("cannot parse {key} from {raw:?}"));
                default
            }
        },
    }
}

fn closest_key(key: &str) -> Option<&'static str> {
    KNOWN_KEYS
        .iter()
        .map(|candidate| (edit_distance(key, candidate), *candidate))
        .filter(|(distance, _)| *distance <= 3)
        .min_by_key(|(distance, _)| *distance)
        .map(|(_, candidate)| candidate)
}

fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut previous: Vec<usize> = (0..=b.len()).collect();
    for (i, &ca) in a.iter().enumerate() {
        let mut current = vec![i + 1];
        for (j, &cb) in b.iter().enumerate() {
            let substitution = previous[j] + usize::from(ca != cb);
            current.push(substitution.min(previous[j + 1] + 1).min(current[j] + 1));
        }
        previous = current;
    }
    previous[b.len()]
}
