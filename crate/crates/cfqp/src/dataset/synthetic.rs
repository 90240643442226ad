//! Seeded synthetic benchmark scenarios: a linear signal in the features plus
//! a per-group location shift and a per-group noise scale.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, DatasetError, Observation};

/// Noise family for the response disturbance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseFamily {
    Gaussian,
    /// Centered log-normal, for right-skewed responses.
    Lognormal,
}

/// Scenario parameters: `Y = beta . X + shift[s] + scale[s] * eps`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticConfig {
    /// Group membership probabilities; must sum to 1.
    pub proportions: Vec<f64>,
    /// Per-group location shift of the response.
    pub shifts: Vec<f64>,
    /// Per-group noise scale; must be positive.
    pub scales: Vec<f64>,
    /// Feature dimension; features are i.i.d. standard normal.
    pub feature_dim: usize,
    pub noise: NoiseFamily,
    /// Linear signal coefficients; defaults to all ones.
    pub coefficients: Option<Vec<f64>>,
}

impl SyntheticConfig {
    /// Two balanced groups with the given shift and scale per group.
    pub fn two_group(shifts: [f64; 2], scales: [f64; 2]) -> Self {
        SyntheticConfig {
            proportions: vec![0.5, 0.5],
            shifts: shifts.to_vec(),
            scales: scales.to_vec(),
            feature_dim: 1,
            noise: NoiseFamily::Gaussian,
            coefficients: None,
        }
    }

    /// Single-group scenario, useful for baseline-equivalence fixtures.
    pub fn single_group(scale: f64) -> Self {
        SyntheticConfig {
            proportions: vec![1.0],
            shifts: vec![0.0],
            scales: vec![scale],
            feature_dim: 1,
            noise: NoiseFamily::Gaussian,
            coefficients: None,
        }
    }

    fn validate(&self) -> Result<(), DatasetError> {
        let k = self.proportions.len();
        if self.shifts.len() != k {
            return Err(DatasetError::ConfigLengthMismatch {
                expected: k,
                found: self.shifts.len(),
            });
        }
        if self.scales.len() != k {
            return Err(DatasetError::ConfigLengthMismatch {
                expected: k,
                found: self.scales.len(),
            });
        }
        let sum: f64 = self.proportions.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.proportions.iter().any(|&p| p < 0.0) {
            return Err(DatasetError::InvalidProportions { sum });
        }
        for (group, &scale) in self.scales.iter().enumerate() {
            if scale <= 0.0 || !scale.is_finite() {
                return Err(DatasetError::NonPositiveScale { group, scale });
            }
        }
        if let Some(beta) = &self.coefficients {
            if beta.len() != self.feature_dim {
                return Err(DatasetError::ConfigLengthMismatch {
                    expected: self.feature_dim,
                    found: beta.len(),
                });
            }
        }
        Ok(())
    }
}

/// Draws `n` observations from the scenario, deterministically given `seed`.
pub fn generate_synthetic(
    config: &SyntheticConfig,
    n: usize,
    seed: u64,
) -> Result<Dataset, DatasetError> {
    config.validate()?;
    if n == 0 {
        return Err(DatasetError::EmptyDataset);
    }
    let k = config.proportions.len();
    let p = config.feature_dim;
    let default_beta = vec![1.0; p];
    let beta = config.coefficients.as_deref().unwrap_or(&default_beta);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut observations = Vec::with_capacity(n);
    for _ in 0..n {
        let group = sample_group(&config.proportions, k, &mut rng);
        let features: Vec<f64> = (0..p).map(|_| standard_normal(&mut rng)).collect();
        let signal: f64 = beta.iter().zip(&features).map(|(b, x)| b * x).sum();
        let eps = match config.noise {
            NoiseFamily::Gaussian => standard_normal(&mut rng),
            // exp(Z) has mean e^{1/2}; subtract it so shifts stay comparable
            NoiseFamily::Lognormal => standard_normal(&mut rng).exp() - (0.5f64).exp(),
        };
        let response = signal + config.shifts[group] + config.scales[group] * eps;
        observations.push(Observation::new(features, group, response));
    }
    Dataset::new(observations, k)
}

fn sample_group<R: Rng>(proportions: &[f64], k: usize, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (group, &p) in proportions.iter().enumerate() {
        acc += p;
        if u < acc {
            return group;
        }
    }
    k - 1
}

/// Standard normal draw via Box-Muller; two uniforms per call keeps the
/// stream layout independent of any cached second value.
pub(crate) fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}
