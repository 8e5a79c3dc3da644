use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BandMethod {
    /// Replicas drawn from a zero-mean Gaussian with the estimated second
    /// moment.
    #[default]
    Gaussian,
    /// Replicas resampled with replacement from the accepted records.
    Bootstrap,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandConfig {
    pub runs: usize,
    pub k_sigma: f64,
    pub method: BandMethod,
}

impl Default for BandConfig {
    fn default() -> Self {
        Self { runs: 1000, k_sigma: 3.0, method: BandMethod::Gaussian }
    }
}

/// Mixes a master seed with a work-item index (splitmix64 finalizer), so
/// that independent work items get decorrelated generators.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_band_args(runs: usize, k_sigma: f64) -> Result<()> {
    if runs < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 Monte Carlo runs, got {runs}")));
    }
    if !k_sigma.is_finite() || k_sigma < 0.0 {
        return Err(Error::InvalidArgument(format!("k_sigma {k_sigma}")));
    }
    Ok(())
}

fn std_dev(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// `estimate ± k_sigma·σ`, with σ the spread of the second-moment estimator
/// over `runs` simulated datasets of `n` Gaussian draws.
///
/// For zero-mean Gaussian data with second moment `v`, `Σ x²` over `n` draws
/// is `v·χ²_n`; each replica samples that sum directly.
pub fn confidence_band(estimate: f64, n: usize, runs: usize, k_sigma: f64, seed: u64) -> Result<(f64, f64)> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("confidence band needs at least 2 samples, got {n}")));
    }
    check_band_args(runs, k_sigma)?;
    if !estimate.is_finite() || estimate < 0.0 {
        return Err(Error::InvalidArgument(format!("second moment {estimate}")));
    }
    let chi2 = ChiSquared::new(n as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let replicas: Vec<f64> = (0..runs).map(|_| estimate * chi2.sample(&mut rng) / n as f64).collect();
    let half = k_sigma * std_dev(&replicas);
    Ok((estimate - half, estimate + half))
}

/// Nonparametric counterpart of [`confidence_band`]: replicas resample the
/// accepted `x1` values with replacement.
pub fn bootstrap_band(values: &[f64], runs: usize, k_sigma: f64, seed: u64) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "confidence band needs at least 2 samples, got {}",
            values.len()
        )));
    }
    check_band_args(runs, k_sigma)?;
    let n = values.len();
    let estimate = values.iter().map(|x| x * x).sum::<f64>() / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let replicas: Vec<f64> = (0..runs)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)].powi(2)).sum::<f64>() / n as f64)
        .collect();
    let half = k_sigma * std_dev(&replicas);
    Ok((estimate - half, estimate + half))
}
