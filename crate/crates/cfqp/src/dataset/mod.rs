//! Tabular samples of (features, sensitive group, response) triplets with
//! seeded splitting, group partitioning, CSV ingestion, and synthetic
//! benchmark generation.

mod csv_io;
mod synthetic;

pub use csv_io::{load_csv, write_csv, CsvSchema, LoadedCsv};
pub use synthetic::{generate_synthetic, NoiseFamily, SyntheticConfig};

#[cfg(test)]
pub(crate) use synthetic::standard_normal;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors produced by dataset construction, splitting, and I/O.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset file not found: {path}")]
    MissingFile { path: String },
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("file {path} contains no data rows")]
    EmptyFile { path: String },
    #[error("column {column:?} not present in header")]
    MissingColumn { column: String },
    #[error("cannot parse cell at row {row}, column {column:?}: {value:?}")]
    UnparsableCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("group column has {found} distinct value(s) but {declared} were declared")]
    GroupCountMismatch { declared: usize, found: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("observation {index} has group label {group} but group_count is {group_count}")]
    GroupOutOfRange {
        index: usize,
        group: usize,
        group_count: usize,
    },
    #[error("observation {index} has {found} feature(s), expected {expected}")]
    RaggedFeatures {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("observation {index} contains a non-finite value")]
    NonFinite { index: usize },
    #[error("split of n={n} at fraction {fraction} leaves one side empty")]
    DegenerateSplit { n: usize, fraction: f64 },
    #[error("group {group} has no members in the given index set")]
    EmptyGroup { group: usize },
    #[error("index {index} out of bounds for dataset of size {n}")]
    IndexOutOfBounds { index: usize, n: usize },
    #[error("group proportions sum to {sum}, expected 1")]
    InvalidProportions { sum: f64 },
    #[error("scale for group {group} must be positive, got {scale}")]
    NonPositiveScale { group: usize, scale: f64 },
    #[error("synthetic config arrays must all have length {expected}, got {found}")]
    ConfigLengthMismatch { expected: usize, found: usize },
    #[error("group {group} has only {size} member(s); cannot stratify")]
    GroupTooSmallToStratify { group: usize, size: usize },
}

/// A single (features, group, response) triplet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub features: Vec<f64>,
    pub group: usize,
    pub response: f64,
}

impl Observation {
    pub fn new(features: Vec<f64>, group: usize, response: f64) -> Self {
        Observation {
            features,
            group,
            response,
        }
    }
}

/// An ordered sample of observations with a fixed number of sensitive groups.
///
/// Immutable after construction; group labels are dense in `0..group_count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    observations: Vec<Observation>,
    group_count: usize,
}

impl Dataset {
    /// Validates and wraps a list of observations.
    pub fn new(observations: Vec<Observation>, group_count: usize) -> Result<Self, DatasetError> {
        if observations.is_empty() {
            return Err(DatasetError::EmptyDataset);
        }
        let dim = observations[0].features.len();
        for (index, obs) in observations.iter().enumerate() {
            if obs.group >= group_count {
                return Err(DatasetError::GroupOutOfRange {
                    index,
                    group: obs.group,
                    group_count,
                });
            }
            if obs.features.len() != dim {
                return Err(DatasetError::RaggedFeatures {
                    index,
                    expected: dim,
                    found: obs.features.len(),
                });
            }
            let finite =
                obs.response.is_finite() && obs.features.iter().all(|v| v.is_finite());
            if !finite {
                return Err(DatasetError::NonFinite { index });
            }
        }
        Ok(Dataset {
            observations,
            group_count,
        })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    pub fn feature_dim(&self) -> usize {
        self.observations[0].features.len()
    }

    pub fn observation(&self, index: usize) -> &Observation {
        &self.observations[index]
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn features(&self, index: usize) -> &[f64] {
        &self.observations[index].features
    }

    pub fn group(&self, index: usize) -> usize {
        self.observations[index].group
    }

    pub fn response(&self, index: usize) -> f64 {
        self.observations[index].response
    }

    pub fn responses(&self) -> Vec<f64> {
        self.observations.iter().map(|o| o.response).collect()
    }

    pub fn groups(&self) -> Vec<usize> {
        self.observations.iter().map(|o| o.group).collect()
    }

    fn check_indices(&self, indices: &[usize]) -> Result<(), DatasetError> {
        for &i in indices {
            if i >= self.len() {
                return Err(DatasetError::IndexOutOfBounds {
                    index: i,
                    n: self.len(),
                });
            }
        }
        Ok(())
    }
}

/// Disjoint proper-training / calibration index sets covering a dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub proper_training: Vec<usize>,
    pub calibration: Vec<usize>,
}

/// Per-group index lists together with the empirical group weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPartition {
    per_group_indices: Vec<Vec<usize>>,
    weights: Vec<f64>,
}

impl GroupPartition {
    pub fn group_count(&self) -> usize {
        self.per_group_indices.len()
    }

    pub fn indices(&self, group: usize) -> &[usize] {
        &self.per_group_indices[group]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Uniformly random train/calibration split, deterministic given `seed`.
///
/// The calibration side receives `round(calibration_fraction * n)` indices.
pub fn split(
    dataset: &Dataset,
    calibration_fraction: f64,
    seed: u64,
) -> Result<SplitIndices, DatasetError> {
    let n = dataset.len();
    if !(calibration_fraction > 0.0 && calibration_fraction < 1.0) {
        return Err(DatasetError::DegenerateSplit {
            n,
            fraction: calibration_fraction,
        });
    }
    let m = (calibration_fraction * n as f64).round() as usize;
    if m == 0 || m >= n {
        return Err(DatasetError::DegenerateSplit {
            n,
            fraction: calibration_fraction,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut calibration: Vec<usize> = order[..m].to_vec();
    let mut proper_training: Vec<usize> = order[m..].to_vec();
    calibration.sort_unstable();
    proper_training.sort_unstable();
    Ok(SplitIndices {
        proper_training,
        calibration,
    })
}

/// Group-stratified variant of [`split`]: the calibration fraction is applied
/// inside every group so that small groups cannot vanish from either side.
/// Every group must have at least two members.
pub fn split_stratified(
    dataset: &Dataset,
    calibration_fraction: f64,
    seed: u64,
) -> Result<SplitIndices, DatasetError> {
    let n = dataset.len();
    if !(calibration_fraction > 0.0 && calibration_fraction < 1.0) {
        return Err(DatasetError::DegenerateSplit {
            n,
            fraction: calibration_fraction,
        });
    }
    let all: Vec<usize> = (0..n).collect();
    let partition = partition_by_group(dataset, &all)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut calibration = Vec::new();
    let mut proper_training = Vec::new();
    for group in 0..partition.group_count() {
        let mut members = partition.indices(group).to_vec();
        let size = members.len();
        if size < 2 {
            return Err(DatasetError::GroupTooSmallToStratify { group, size });
        }
        let m = ((calibration_fraction * size as f64).round() as usize).clamp(1, size - 1);
        members.shuffle(&mut rng);
        calibration.extend_from_slice(&members[..m]);
        proper_training.extend_from_slice(&members[m..]);
    }
    calibration.sort_unstable();
    proper_training.sort_unstable();
    Ok(SplitIndices {
        proper_training,
        calibration,
    })
}

/// Splits an index set by sensitive group, preserving input order, and
/// computes the empirical group weights over that index set.
///
/// Every group of the dataset must appear at least once: downstream fairness
/// synchronization needs a quantile function for every group, so a silently
/// missing group is an error rather than a zero weight.
pub fn partition_by_group(
    dataset: &Dataset,
    indices: &[usize],
) -> Result<GroupPartition, DatasetError> {
    dataset.check_indices(indices)?;
    let k = dataset.group_count();
    let mut per_group_indices: Vec<Vec<usize>> = vec![Vec::new(); k];
    for &i in indices {
        per_group_indices[dataset.group(i)].push(i);
    }
    for (group, members) in per_group_indices.iter().enumerate() {
        if members.is_empty() {
            return Err(DatasetError::EmptyGroup { group });
        }
    }
    let total = indices.len() as f64;
    let weights = per_group_indices
        .iter()
        .map(|members| members.len() as f64 / total)
        .collect();
    Ok(GroupPartition {
        per_group_indices,
        weights,
    })
}

/// Interquartile range of a sample; used for the default jitter scale.
pub fn interquartile_range(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |t: f64| -> f64 {
        let k = crate::util::ceil_index_guarded(t * sorted.len() as f64).clamp(1, sorted.len());
        sorted[k - 1]
    };
    q(0.75) - q(0.25)
}
