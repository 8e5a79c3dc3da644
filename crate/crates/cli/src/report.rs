use hom_witness::analysis::{derive_seed, witness_report, BandConfig, ConditionWindow, WitnessReport};
use hom_witness::homodyne::QuadratureSample;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliResult;

pub const HIST_LO: f64 = -4.0;
pub const HIST_HI: f64 = 4.0;
pub const HIST_BINS: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Moments {
    pub mean_x1: f64,
    pub mean_x1_sq: f64,
    pub mean_x2: f64,
    pub mean_x2_sq: f64,
}

impl Moments {
    pub fn of(samples: &[QuadratureSample]) -> Self {
        let n = samples.len() as f64;
        let mean = |f: &dyn Fn(&QuadratureSample) -> f64| samples.iter().map(f).sum::<f64>() / n;
        Self {
            mean_x1: mean(&|s| s.x1),
            mean_x1_sq: mean(&|s| s.x1 * s.x1),
            mean_x2: mean(&|s| s.x2),
            mean_x2_sq: mean(&|s| s.x2 * s.x2),
        }
    }
}

/// Occurrence counts of the accepted `x1` values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
    pub below: usize,
    pub above: usize,
}

impl Histogram {
    pub fn of(values: impl Iterator<Item = f64>) -> Self {
        let width = (HIST_HI - HIST_LO) / HIST_BINS as f64;
        let mut h = Self { lo: HIST_LO, hi: HIST_HI, counts: vec![0; HIST_BINS], below: 0, above: 0 };
        for v in values {
            if v < HIST_LO {
                h.below += 1;
            } else if v >= HIST_HI {
                h.above += 1;
            } else {
                h.counts[(((v - HIST_LO) / width) as usize).min(HIST_BINS - 1)] += 1;
            }
        }
        h
    }

    pub fn bins(&self) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        let width = (self.hi - self.lo) / self.counts.len() as f64;
        self.counts.iter().enumerate().map(move |(i, &c)| (self.lo + i as f64 * width, self.lo + (i + 1) as f64 * width, c))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowEntry {
    #[serde(flatten)]
    pub report: WitnessReport,
    pub lower: f64,
    pub upper: f64,
    /// Mean-subtracted variance of the accepted `x1`.
    pub variance: f64,
    /// Mean subtraction moves the value by more than the band half-width, so
    /// second moment and variance would tell different stories.
    pub moment_variance_discrepancy: bool,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub config_hash: String,
    pub seed: u64,
    pub n_samples: usize,
    pub moments: Moments,
    pub windows: Vec<WindowEntry>,
    pub verdict: String,
}

/// Band seed of window `i`: `derive_seed(seed, i)`.
pub fn analyze(
    samples: &[QuadratureSample],
    windows: &[ConditionWindow],
    band: &BandConfig,
    seed: u64,
    config_hash: String,
) -> CliResult<AnalysisReport> {
    let mut entries = Vec::with_capacity(windows.len());
    for (i, &w) in windows.iter().enumerate() {
        let report = witness_report(samples, w, band, derive_seed(seed, i as u64))?;
        let shift = report.first_moment * report.first_moment;
        entries.push(WindowEntry {
            report,
            lower: w.lower(),
            upper: w.upper(),
            variance: report.estimate - shift,
            moment_variance_discrepancy: shift > report.band_hi - report.estimate,
            histogram: Histogram::of(samples.iter().filter(|s| w.contains(s.x2)).map(|s| s.x1)),
        });
    }
    let violated = entries.iter().any(|e| e.report.violated);
    Ok(AnalysisReport {
        config_hash,
        seed,
        n_samples: samples.len(),
        moments: Moments::of(samples),
        windows: entries,
        verdict: format!("witness violated: {}", if violated { "yes" } else { "no" }),
    })
}

/// 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to 12 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report serializes");
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}
