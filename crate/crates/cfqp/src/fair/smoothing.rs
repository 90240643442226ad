//! Quantile-function representations on a rank grid: the raw empirical step
//! function, a kernel-smoothed integral transform, and local-linear fits of
//! the order statistics.

use serde::{Deserialize, Serialize};

use super::{EmpiricalCdf, FairError};

pub(crate) const DEFAULT_GRID_SIZE: usize = 1024;
const INNER_QUADRATURE_POINTS: usize = 4096;
const GAUSSIAN_SUPPORT: f64 = 8.0;

/// Kernel for the smoothed quantile estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `K(u) = 1 - |u|` on `[-1, 1]`.
    Triangular,
    /// Standard normal density, truncated far into the tails.
    Gaussian,
}

impl KernelKind {
    fn support(&self) -> f64 {
        match self {
            KernelKind::Triangular => 1.0,
            KernelKind::Gaussian => GAUSSIAN_SUPPORT,
        }
    }

    fn density(&self, u: f64) -> f64 {
        match self {
            KernelKind::Triangular => (1.0 - u.abs()).max(0.0),
            KernelKind::Gaussian => (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt(),
        }
    }
}

/// Bandwidth (or local-linear radius) in rank units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bandwidth {
    Fixed(f64),
    /// `n^(-1/4)`, clamped into `(0, 0.5)`; vanishes as the sample grows.
    SampleSizeRule,
}

impl Bandwidth {
    pub fn resolve(&self, n: usize) -> f64 {
        match self {
            Bandwidth::Fixed(h) => *h,
            Bandwidth::SampleSizeRule => (n as f64).powf(-0.25).clamp(1e-6, 0.49),
        }
    }
}

/// How the per-group quantile function is represented.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothingMethod {
    /// Exact empirical step quantile; no smoothing.
    Empirical,
    /// Kernel-weighted integral of the empirical quantile function.
    Kernel {
        bandwidth: Bandwidth,
        kernel: KernelKind,
    },
    /// Weighted linear fit of the order statistics around each rank.
    LocalLinear { radius: Bandwidth },
}

impl SmoothingMethod {
    /// Triangular kernel with the vanishing-bandwidth rule.
    pub fn default_kernel() -> Self {
        SmoothingMethod::Kernel {
            bandwidth: Bandwidth::SampleSizeRule,
            kernel: KernelKind::Triangular,
        }
    }
}

/// A quantile function evaluated on `M` interior ranks `(j + 1/2) / M`,
/// non-decreasing by construction.
///
/// The empirical method answers queries from the exact step function so that
/// sample points reproduce order statistics bit-for-bit; the smoothed methods
/// interpolate linearly between grid ranks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothedQuantileFn {
    method: SmoothingMethod,
    grid_values: Vec<f64>,
    source: EmpiricalCdf,
    repairs: usize,
}

impl SmoothedQuantileFn {
    pub fn fit(
        source: &EmpiricalCdf,
        method: &SmoothingMethod,
        grid_size: usize,
    ) -> Result<Self, FairError> {
        if grid_size < 16 {
            return Err(FairError::GridTooSmall { grid_size });
        }
        let n = source.len();
        let ranks: Vec<f64> = (0..grid_size)
            .map(|j| (j as f64 + 0.5) / grid_size as f64)
            .collect();
        let mut grid_values: Vec<f64> = match method {
            SmoothingMethod::Empirical => ranks
                .iter()
                .map(|&t| source.quantile_clamped(t))
                .collect(),
            SmoothingMethod::Kernel { bandwidth, kernel } => {
                let h = bandwidth.resolve(n);
                if !(h > 0.0 && h < 0.5) {
                    return Err(FairError::InvalidBandwidth { bandwidth: h });
                }
                kernel_smoothed_grid(source, &ranks, h, *kernel)
            }
            SmoothingMethod::LocalLinear { radius } => {
                let r = radius.resolve(n);
                if !(r > 0.0 && r <= 0.5) {
                    return Err(FairError::InvalidRadius { radius: r });
                }
                local_linear_grid(source, &ranks, r)
            }
        };
        // quadrature and local fits can dent monotonicity by a hair; repair
        // with a cumulative max and keep count
        let mut repairs = 0;
        for j in 1..grid_values.len() {
            if grid_values[j] < grid_values[j - 1] {
                repairs += 1;
                grid_values[j] = grid_values[j - 1];
            }
        }
        Ok(SmoothedQuantileFn {
            method: *method,
            grid_values,
            source: source.clone(),
            repairs,
        })
    }

    pub fn method(&self) -> SmoothingMethod {
        self.method
    }

    pub fn grid_size(&self) -> usize {
        self.grid_values.len()
    }

    pub fn grid_values(&self) -> &[f64] {
        &self.grid_values
    }

    /// Number of grid points lifted by the monotone rearrangement.
    pub fn repairs(&self) -> usize {
        self.repairs
    }

    /// Quantile value at rank `t` in `(0, 1)`.
    pub fn eval(&self, t: f64) -> f64 {
        match self.method {
            SmoothingMethod::Empirical => self.source.quantile_clamped(t),
            _ => {
                let m = self.grid_values.len() as f64;
                let position = (t * m - 0.5).clamp(0.0, m - 1.0);
                let j = position.floor() as usize;
                if j + 1 >= self.grid_values.len() {
                    return self.grid_values[j];
                }
                let frac = position - j as f64;
                self.grid_values[j] * (1.0 - frac) + self.grid_values[j + 1] * frac
            }
        }
    }
}

/// Empirical quantile function extended beyond `(0, 1]` by reflecting the
/// rank at the boundaries, so kernel mass falling outside the unit interval
/// is re-read from mirrored ranks.
fn reflected_quantile(source: &EmpiricalCdf, v: f64) -> f64 {
    let mut folded = v.rem_euclid(2.0);
    if folded > 1.0 {
        folded = 2.0 - folded;
    }
    source.quantile_clamped(folded)
}

/// Trapezoid quadrature of the kernel integral in kernel-standardized
/// coordinates: `q(t) = int K(u) Finv(t - h u) du` over the kernel support,
/// normalized by the discrete kernel mass. Exact as `h` tends to zero and a
/// convex combination of sample values, so the result stays within the
/// sample range.
fn kernel_smoothed_grid(
    source: &EmpiricalCdf,
    ranks: &[f64],
    h: f64,
    kernel: KernelKind,
) -> Vec<f64> {
    let support = kernel.support();
    let nodes = INNER_QUADRATURE_POINTS;
    let du = 2.0 * support / (nodes - 1) as f64;
    let mut offsets = Vec::with_capacity(nodes);
    let mut mass = Vec::with_capacity(nodes);
    let mut total = 0.0;
    for i in 0..nodes {
        let u = -support + du * i as f64;
        let trapezoid = if i == 0 || i == nodes - 1 { 0.5 } else { 1.0 };
        let w = kernel.density(u) * trapezoid * du;
        offsets.push(h * u);
        mass.push(w);
        total += w;
    }
    ranks
        .iter()
        .map(|&t| {
            let mut acc = 0.0;
            for (offset, w) in offsets.iter().zip(&mass) {
                if *w > 0.0 {
                    acc += w * reflected_quantile(source, t - offset);
                }
            }
            acc / total
        })
        .collect()
}

/// Weighted local-linear fit of the order statistics (at plotting positions
/// `(j - 1/2) / n`) inside `radius` of each grid rank; triangular weights.
fn local_linear_grid(source: &EmpiricalCdf, ranks: &[f64], radius: f64) -> Vec<f64> {
    let values = source.sorted_values();
    let n = values.len();
    let position = |j: usize| (j as f64 + 0.5) / n as f64;
    let min = values[0];
    let max = values[n - 1];
    ranks
        .iter()
        .map(|&t| {
            let first = ((t - radius) * n as f64 - 0.5).ceil().max(0.0) as usize;
            let mut s0 = 0.0;
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            let mut t0 = 0.0;
            let mut t1 = 0.0;
            let mut count = 0;
            let mut j = first;
            while j < n {
                let d = position(j) - t;
                if d > radius {
                    break;
                }
                let w = 1.0 - d.abs() / radius;
                if w > 0.0 {
                    s0 += w;
                    s1 += w * d;
                    s2 += w * d * d;
                    t0 += w * values[j];
                    t1 += w * d * values[j];
                    count += 1;
                }
                j += 1;
            }
            let denominator = s0 * s2 - s1 * s1;
            let fitted = if count < 2 || denominator.abs() < 1e-300 {
                source.quantile_clamped(t)
            } else {
                (s2 * t0 - s1 * t1) / denominator
            };
            fitted.clamp(min, max)
        })
        .collect()
}
