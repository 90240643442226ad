//! Evaluation metrics: empirical coverage, interval length, the max-over-
//! group-pairs Kolmogorov-Smirnov unfairness of quantile endpoints, mean
//! absolute error, and the KS utilities backing the statistical test suites.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conformal::PredictionInterval;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("input lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("inputs are empty")]
    Empty,
    #[error("group {group} has no members")]
    EmptyGroup { group: usize },
    #[error("need at least two groups, got {group_count}")]
    NeedTwoGroups { group_count: usize },
    #[error("group label {group} out of range for {group_count} group(s)")]
    UnknownGroup { group: usize, group_count: usize },
}

/// Fraction of responses inside their closed interval. Crossed intervals
/// (lower above upper) cover nothing.
pub fn coverage(
    intervals: &[PredictionInterval],
    responses: &[f64],
) -> Result<f64, MetricsError> {
    check_lengths(intervals.len(), responses.len())?;
    if intervals.is_empty() {
        return Err(MetricsError::Empty);
    }
    let covered = intervals
        .iter()
        .zip(responses)
        .filter(|(interval, &y)| interval.covers(y))
        .count();
    Ok(covered as f64 / intervals.len() as f64)
}

/// Exact two-sample Kolmogorov-Smirnov statistic via a sorted merge sweep;
/// the supremum over all of R is attained at sample points.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_unstable_by(|u, v| u.partial_cmp(v).unwrap());
    ys.sort_unstable_by(|u, v| u.partial_cmp(v).unwrap());
    let (mut i, mut j) = (0usize, 0usize);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let mut statistic: f64 = 0.0;
    while i < xs.len() || j < ys.len() {
        let t = match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => break,
        };
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        statistic = statistic.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(statistic)
}

/// One-sample KS distance of a sample from Uniform(0, 1).
pub fn one_sample_ks_uniform(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    let mut statistic: f64 = 0.0;
    for (index, &u) in sorted.iter().enumerate() {
        let upper = (index as f64 + 1.0) / n - u;
        let lower = u - index as f64 / n;
        statistic = statistic.max(upper).max(lower);
    }
    Ok(statistic)
}

const KS_COEFFICIENT_1PCT: f64 = 1.62762; // sqrt(-ln(0.005) / 2)

/// Asymptotic 1%-level critical value of the two-sample KS statistic.
pub fn two_sample_ks_critical_1pct(n: usize, m: usize) -> f64 {
    KS_COEFFICIENT_1PCT * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Asymptotic 1%-level critical value of the one-sample KS statistic.
pub fn one_sample_ks_critical_1pct(n: usize) -> f64 {
    KS_COEFFICIENT_1PCT / (n as f64).sqrt()
}

/// Max over group pairs of the exact two-sample KS distance between the
/// group-conditional value distributions; the demographic-parity violation
/// of a prediction rule.
pub fn ks_unfairness(
    values: &[f64],
    groups: &[usize],
    group_count: usize,
) -> Result<f64, MetricsError> {
    check_lengths(values.len(), groups.len())?;
    if group_count < 2 {
        return Err(MetricsError::NeedTwoGroups { group_count });
    }
    let mut per_group: Vec<Vec<f64>> = vec![Vec::new(); group_count];
    for (&value, &group) in values.iter().zip(groups) {
        if group >= group_count {
            return Err(MetricsError::UnknownGroup { group, group_count });
        }
        per_group[group].push(value);
    }
    for (group, members) in per_group.iter().enumerate() {
        if members.is_empty() {
            return Err(MetricsError::EmptyGroup { group });
        }
    }
    let mut statistic: f64 = 0.0;
    for s in 0..group_count {
        for s_prime in s + 1..group_count {
            statistic = statistic.max(two_sample_ks(&per_group[s], &per_group[s_prime])?);
        }
    }
    Ok(statistic)
}

/// Mean absolute error of quantile estimates against responses.
pub fn mae(predictions: &[f64], responses: &[f64]) -> Result<f64, MetricsError> {
    check_lengths(predictions.len(), responses.len())?;
    if predictions.is_empty() {
        return Err(MetricsError::Empty);
    }
    let total: f64 = predictions
        .iter()
        .zip(responses)
        .map(|(&p, &y)| (p - y).abs())
        .sum();
    Ok(total / predictions.len() as f64)
}

/// All per-run metrics for one method on one test set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub coverage: f64,
    pub mean_length: f64,
    pub ks_lo: f64,
    pub ks_hi: f64,
    pub mae_lo: f64,
    pub mae_hi: f64,
    pub crossing_count: usize,
    pub per_group_coverage: Vec<f64>,
    /// Set when there is a single group; the KS fields are reported as zero
    /// because no pair exists to compare.
    pub single_group: bool,
}

impl EvaluationReport {
    /// Fixed CSV column order. Per-group coverage columns come last.
    pub fn csv_header(group_count: usize) -> Vec<String> {
        let mut header = vec![
            "seed".to_string(),
            "coverage".to_string(),
            "mean_length".to_string(),
            "ks_lo".to_string(),
            "ks_hi".to_string(),
            "mae_lo".to_string(),
            "mae_hi".to_string(),
            "crossing_count".to_string(),
        ];
        for group in 0..group_count {
            header.push(format!("coverage_g{group}"));
        }
        header
    }

    pub fn csv_row(&self, seed: u64) -> Vec<String> {
        let mut row = vec![
            seed.to_string(),
            format!("{}", self.coverage),
            format!("{}", self.mean_length),
            format!("{}", self.ks_lo),
            format!("{}", self.ks_hi),
            format!("{}", self.mae_lo),
            format!("{}", self.mae_hi),
            self.crossing_count.to_string(),
        ];
        for value in &self.per_group_coverage {
            row.push(format!("{value}"));
        }
        row
    }
}

/// Assembles the full report for one method: interval coverage and length,
/// endpoint unfairness and accuracy, and per-group coverage.
pub fn evaluate(
    responses: &[f64],
    groups: &[usize],
    group_count: usize,
    lower_endpoints: &[f64],
    upper_endpoints: &[f64],
    intervals: &[PredictionInterval],
) -> Result<EvaluationReport, MetricsError> {
    check_lengths(responses.len(), groups.len())?;
    check_lengths(responses.len(), lower_endpoints.len())?;
    check_lengths(responses.len(), upper_endpoints.len())?;
    check_lengths(responses.len(), intervals.len())?;
    if responses.is_empty() {
        return Err(MetricsError::Empty);
    }
    let single_group = group_count < 2;
    let (ks_lo, ks_hi) = if single_group {
        (0.0, 0.0)
    } else {
        (
            ks_unfairness(lower_endpoints, groups, group_count)?,
            ks_unfairness(upper_endpoints, groups, group_count)?,
        )
    };
    let mut per_group_coverage = Vec::with_capacity(group_count);
    for group in 0..group_count {
        let mut covered = 0usize;
        let mut total = 0usize;
        for ((interval, &y), &g) in intervals.iter().zip(responses).zip(groups) {
            if g == group {
                total += 1;
                if interval.covers(y) {
                    covered += 1;
                }
            }
        }
        if total == 0 {
            return Err(MetricsError::EmptyGroup { group });
        }
        per_group_coverage.push(covered as f64 / total as f64);
    }
    Ok(EvaluationReport {
        coverage: coverage(intervals, responses)?,
        mean_length: intervals.iter().map(|i| i.length()).sum::<f64>() / intervals.len() as f64,
        ks_lo,
        ks_hi,
        mae_lo: mae(lower_endpoints, responses)?,
        mae_hi: mae(upper_endpoints, responses)?,
        crossing_count: intervals.iter().filter(|i| i.is_crossed()).count(),
        per_group_coverage,
        single_group,
    })
}

fn check_lengths(left: usize, right: usize) -> Result<(), MetricsError> {
    if left == right {
        Ok(())
    } else {
        Err(MetricsError::LengthMismatch { left, right })
    }
}
