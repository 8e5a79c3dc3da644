//! Composite Simpson quadrature.

/// Nodes and weights of the composite Simpson rule on `[a, b]` with at least
/// `min_intervals` subintervals (rounded up to an even count).
pub(crate) fn simpson_nodes(a: f64, b: f64, min_intervals: usize) -> Vec<(f64, f64)> {
    let n = (min_intervals.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            (a + i as f64 * h, w * h / 3.0)
        })
        .collect()
}
