//! Small numeric helpers shared across modules.

/// Ceiling of `x` as a 1-based order-statistic index, snapping to the nearest
/// integer when `x` is within 1e-9 of it.
///
/// Rank levels arrive as products like `(1 - alpha) * (n + 1)`, which are
/// mathematically integral in the worked cases but carry float noise (IEEE
/// `0.9 * 100.0` is just above 90); a bare ceiling would shift the order
/// statistic by one.
pub(crate) fn ceil_index_guarded(x: f64) -> usize {
    debug_assert!(x.is_finite());
    let nearest = x.round();
    let snapped = if (x - nearest).abs() < 1e-9 {
        nearest
    } else {
        x.ceil()
    };
    if snapped < 0.0 {
        0
    } else {
        snapped as usize
    }
}

/// The k-th smallest value (1-based) of an unsorted sample.
pub(crate) fn order_statistic(values: &[f64], k: usize) -> f64 {
    debug_assert!(k >= 1 && k <= values.len());
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    sorted[k - 1]
}
