use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::band::{bootstrap_band, confidence_band, derive_seed, BandConfig, BandMethod};
use crate::error::{Error, Result};
use crate::homodyne::QuadratureSample;

/// Best window position for one width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub delta: f64,
    pub best_center: f64,
    pub e_min: f64,
    pub n_in_window: usize,
    pub band_lo: f64,
    pub band_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SkipReason {
    /// `center − Δ/2 < 0` for an `|X2|` window.
    NegativeLowerEdge,
    /// Fewer than two accepted records.
    TooFewSamples(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkippedWindow {
    pub delta: f64,
    pub center: f64,
    pub reason: SkipReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// One row per width with at least one usable window, in input order.
    pub rows: Vec<SweepRow>,
    /// Width whose best window has the lowest upper band edge.
    pub best_delta: f64,
    pub skipped: Vec<SkippedWindow>,
}

impl SweepResult {
    pub fn best_row(&self) -> &SweepRow {
        self.rows.iter().find(|r| r.delta == self.best_delta).expect("best row present")
    }

    pub fn row(&self, delta: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| (r.delta - delta).abs() < 1e-12)
    }
}

/// Accepted records sorted by `|x2|`, for range queries.
struct SortedRecords {
    abs_x2: Vec<f64>,
    x1: Vec<f64>,
    /// prefix sums of `x1²`
    prefix: Vec<f64>,
}

impl SortedRecords {
    fn new(samples: &[QuadratureSample]) -> Self {
        let mut pairs: Vec<(f64, f64)> = samples.iter().map(|s| (s.x2.abs(), s.x1)).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut prefix = Vec::with_capacity(pairs.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for (_, x1) in &pairs {
            acc += x1 * x1;
            prefix.push(acc);
        }
        let (abs_x2, x1) = pairs.into_iter().unzip();
        Self { abs_x2, x1, prefix }
    }

    /// Index range with `lo < |x2| < hi`.
    fn range(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let start = self.abs_x2.partition_point(|&a| a <= lo);
        let end = self.abs_x2.partition_point(|&a| a < hi).max(start);
        start..end
    }
}

enum Cell {
    Row(SweepRow),
    Skip(SkippedWindow),
}

/// Scans `|X2|` windows of every width and center.
///
/// For each width the center with the lowest upper band edge is kept; the
/// width with the lowest such edge is selected, ties going to the smaller
/// width. Band replicas of cell `i` are seeded from `derive_seed(seed, i)`.
pub fn optimize_window(
    samples: &[QuadratureSample],
    deltas: &[f64],
    centers: &[f64],
    band: &BandConfig,
    seed: u64,
) -> Result<SweepResult> {
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    if deltas.is_empty() || centers.is_empty() {
        return Err(Error::InvalidArgument("sweep grids must be nonempty".into()));
    }
    if let Some(d) = deltas.iter().find(|d| !(**d > 0.0) || !d.is_finite()) {
        return Err(Error::InvalidArgument(format!("window width {d}")));
    }
    if let Some(c) = centers.iter().find(|c| !c.is_finite()) {
        return Err(Error::InvalidArgument(format!("window center {c}")));
    }
    let sorted = SortedRecords::new(samples);
    let nc = centers.len();

    let cells: Vec<Cell> = (0..deltas.len() * nc)
        .into_par_iter()
        .map(|idx| -> Result<Cell> {
            let (delta, center) = (deltas[idx / nc], centers[idx % nc]);
            let lo = center - 0.5 * delta;
            if lo < -1e-12 {
                return Ok(Cell::Skip(SkippedWindow { delta, center, reason: SkipReason::NegativeLowerEdge }));
            }
            let range = sorted.range(lo.max(0.0), center + 0.5 * delta);
            let n = range.len();
            if n < 2 {
                return Ok(Cell::Skip(SkippedWindow { delta, center, reason: SkipReason::TooFewSamples(n) }));
            }
            let e = (sorted.prefix[range.end] - sorted.prefix[range.start]) / n as f64;
            let cell_seed = derive_seed(seed, idx as u64);
            let (band_lo, band_hi) = match band.method {
                BandMethod::Gaussian => confidence_band(e, n, band.runs, band.k_sigma, cell_seed)?,
                BandMethod::Bootstrap => bootstrap_band(&sorted.x1[range], band.runs, band.k_sigma, cell_seed)?,
            };
            Ok(Cell::Row(SweepRow { delta, best_center: center, e_min: e, n_in_window: n, band_lo, band_hi }))
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for chunk in cells.chunks(nc) {
        let mut best: Option<SweepRow> = None;
        for cell in chunk {
            match cell {
                Cell::Row(r) => {
                    if best.is_none_or(|b| r.band_hi < b.band_hi) {
                        best = Some(*r);
                    }
                }
                Cell::Skip(s) => skipped.push(*s),
            }
        }
        rows.extend(best);
    }
    let best = rows
        .iter()
        .min_by(|a, b| a.band_hi.total_cmp(&b.band_hi).then(a.delta.total_cmp(&b.delta)))
        .ok_or(Error::EmptyWindow)?;
    Ok(SweepResult { best_delta: best.delta, rows, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records() -> Vec<QuadratureSample> {
        (0..400)
            .map(|i| {
                let t = i as f64 / 400.0;
                QuadratureSample { x1: (7.0 * t).sin(), x2: 3.0 * (2.0 * t - 1.0) + 1e-3 }
            })
            .collect()
    }

    #[test]
    fn huge_window_gives_unconditioned_moment() {
        let s = records();
        let all = s.iter().map(|q| q.x1 * q.x1).sum::<f64>() / s.len() as f64;
        let res = optimize_window(&s, &[20.0], &[10.0, 11.0], &BandConfig::default(), 1).unwrap();
        assert_eq!(res.rows.len(), 1);
        assert!((res.rows[0].e_min - all).abs() < 1e-12);
        assert_eq!(res.rows[0].n_in_window, s.len());
    }

    #[test]
    fn matches_direct_filtering() {
        let s = records();
        let res = optimize_window(&s, &[0.4], &[1.0], &BandConfig::default(), 1).unwrap();
        let w = crate::analysis::ConditionWindow::new(1.0, 0.4, true).unwrap();
        let direct = crate::analysis::estimate_windowed_moment(&s, w).unwrap();
        assert_eq!(res.rows[0].n_in_window, direct.n_in_window);
        assert!((res.rows[0].e_min - direct.estimate).abs() < 1e-12);
    }

    #[test]
    fn skips_are_recorded() {
        let s = records();
        let res = optimize_window(&s, &[0.5], &[0.0, 1.0, 5.0], &BandConfig::default(), 1).unwrap();
        assert_eq!(res.skipped.len(), 2);
        assert_eq!(res.skipped[0].reason, SkipReason::NegativeLowerEdge);
        assert!(matches!(res.skipped[1].reason, SkipReason::TooFewSamples(0)));
        assert_eq!(res.rows[0].best_center, 1.0);
    }

    #[test]
    fn all_empty_is_error() {
        let s = records();
        assert_eq!(
            optimize_window(&s, &[0.1], &[8.0], &BandConfig::default(), 1),
            Err(Error::EmptyWindow)
        );
        assert!(optimize_window(&[], &[0.1], &[1.0], &BandConfig::default(), 1).is_err());
        assert!(optimize_window(&s, &[], &[1.0], &BandConfig::default(), 1).is_err());
    }

    #[test]
    fn deterministic_regardless_of_threads() {
        let s = records();
        let deltas: Vec<f64> = (1..=10).map(|i| 0.2 * i as f64).collect();
        let centers: Vec<f64> = (0..30).map(|i| 0.1 * i as f64).collect();
        let a = optimize_window(&s, &deltas, &centers, &BandConfig::default(), 42).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| optimize_window(&s, &deltas, &centers, &BandConfig::default(), 42).unwrap());
        assert_eq!(a, b);
    }
}
