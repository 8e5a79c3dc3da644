use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::band::{bootstrap_band, confidence_band, BandConfig, BandMethod};
use crate::error::{Error, Result};
use crate::fock::{expect, trace_product, x_matrix, x_squared_matrix, DensityMatrix};
use crate::homodyne::{conditional_state, contract_mode2, psi_all, require_two_mode, rotate, QuadratureSample};
use crate::quad::simpson_nodes;

/// Second moment of a vacuum quadrature; the witness threshold.
pub const VACUUM_VARIANCE: f64 = 0.5;

/// Marginal densities below this count as a null conditioning event.
const NULL_DENSITY: f64 = 1e-12;

/// Post-selection interval on the conditioning quadrature `X2`.
///
/// With `symmetric_abs` the acceptance set is
/// `{x : center − width/2 < |x| < center + width/2}`, otherwise the signed
/// open interval around `center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionWindow {
    pub center: f64,
    pub width: f64,
    pub symmetric_abs: bool,
}

impl ConditionWindow {
    pub fn new(center: f64, width: f64, symmetric_abs: bool) -> Result<Self> {
        if !center.is_finite() || !width.is_finite() || width <= 0.0 {
            return Err(Error::InvalidArgument(format!("window width {width} must be positive")));
        }
        if symmetric_abs && center - 0.5 * width < -1e-12 {
            return Err(Error::InvalidArgument(format!(
                "window |x2| in ({}, {}) has a negative lower edge",
                center - 0.5 * width,
                center + 0.5 * width
            )));
        }
        Ok(Self { center, width, symmetric_abs })
    }

    /// `lo < |x2| < hi`.
    pub fn from_abs_bounds(lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::InvalidArgument(format!("window bounds {lo}, {hi} are not increasing")));
        }
        Self::new(0.5 * (lo + hi), hi - lo, true)
    }

    pub fn lower(&self) -> f64 {
        (self.center - 0.5 * self.width).max(if self.symmetric_abs { 0.0 } else { f64::NEG_INFINITY })
    }

    pub fn upper(&self) -> f64 {
        self.center + 0.5 * self.width
    }

    pub fn contains(&self, x2: f64) -> bool {
        let v = if self.symmetric_abs { x2.abs() } else { x2 };
        self.lower() < v && v < self.upper()
    }

    /// Signed intervals making up the acceptance set.
    pub fn intervals(&self) -> Vec<(f64, f64)> {
        let (lo, hi) = (self.lower(), self.upper());
        if self.symmetric_abs {
            vec![(-hi, -lo), (lo, hi)]
        } else {
            vec![(lo, hi)]
        }
    }
}

/// `Tr[X² ρ_c(x2)] / Tr[ρ_c(x2)]`: the conditional noncentral second moment
/// of `X1(Δθ)` given an exact outcome `X2 = x2`.
pub fn exact_conditional_second_moment(state: &DensityMatrix, delta_theta: f64, x2: f64) -> Result<f64> {
    let rc = conditional_state(state, delta_theta, x2)?;
    let weight = rc.trace();
    if !(weight > NULL_DENSITY) {
        return Err(Error::NullCondition(weight));
    }
    Ok(expect(&rc, &x_squared_matrix(state.cutoff()))? / weight)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    /// Probability that `X2` falls in the window.
    pub probability: f64,
    /// Conditional mean of `X1(Δθ)`.
    pub first_moment: f64,
    /// Conditional noncentral second moment of `X1(Δθ)`.
    pub second_moment: f64,
}

/// Window-integrated conditional state, reusable across phases `Δθ`.
#[derive(Debug, Clone)]
pub struct WindowKernel {
    integrated: DMatrix<num_complex::Complex64>,
    x: DMatrix<num_complex::Complex64>,
    x_sq: DMatrix<num_complex::Complex64>,
    window: ConditionWindow,
}

impl WindowKernel {
    /// Integrates `ρ_c(x)` over the window with composite Simpson rules.
    pub fn new(state: &DensityMatrix, window: ConditionWindow) -> Result<Self> {
        require_two_mode(state)?;
        let cut = state.cutoff();
        let d = cut.dim();
        let mut kernel = DMatrix::<f64>::zeros(d, d);
        for (lo, hi) in window.intervals() {
            let steps = ((hi - lo) / 5e-4).ceil() as usize;
            for (x, w) in simpson_nodes(lo, hi, steps.max(200)) {
                let psi = psi_all(cut.n_max(), x);
                for m in 0..d {
                    for l in 0..d {
                        kernel[(m, l)] += w * psi[m] * psi[l];
                    }
                }
            }
        }
        Ok(Self {
            integrated: contract_mode2(state, &kernel),
            x: x_matrix(cut),
            x_sq: x_squared_matrix(cut),
            window,
        })
    }

    pub fn window(&self) -> ConditionWindow {
        self.window
    }

    pub fn stats(&self, delta_theta: f64) -> Result<WindowStats> {
        let r = rotate(self.integrated.clone(), delta_theta);
        let probability: f64 = r.diagonal().iter().map(|c| c.re).sum();
        if !(probability > NULL_DENSITY) {
            return Err(Error::EmptyWindow);
        }
        Ok(WindowStats {
            probability,
            first_moment: trace_product(&r, &self.x)? / probability,
            second_moment: trace_product(&r, &self.x_sq)? / probability,
        })
    }
}

pub fn exact_window_stats(state: &DensityMatrix, delta_theta: f64, window: ConditionWindow) -> Result<WindowStats> {
    WindowKernel::new(state, window)?.stats(delta_theta)
}

/// Exact second moment of `X1(Δθ)` conditioned on `X2` in the window.
pub fn exact_windowed_moment(state: &DensityMatrix, delta_theta: f64, window: ConditionWindow) -> Result<f64> {
    Ok(exact_window_stats(state, delta_theta, window)?.second_moment)
}

/// Local-oscillator phase in `[−π/2, π/2)` minimizing the windowed moment,
/// scanned with the given step.
pub fn minimizing_angle(state: &DensityMatrix, window: ConditionWindow, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("angle step {step}")));
    }
    let kernel = WindowKernel::new(state, window)?;
    let n = (2.0 * FRAC_PI_2 / step).ceil() as usize;
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..n {
        let theta = -FRAC_PI_2 + i as f64 * step;
        let m = kernel.stats(theta)?.second_moment;
        if m < best.0 {
            best = (m, theta);
        }
    }
    Ok(best.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowEstimate {
    /// Mean of `x1²` over accepted records.
    pub estimate: f64,
    /// Mean of `x1`, kept for diagnostics.
    pub first_moment: f64,
    pub n_in_window: usize,
}

impl WindowEstimate {
    /// Mean-subtracted variance of the accepted `x1` values.
    pub fn variance(&self) -> f64 {
        self.estimate - self.first_moment * self.first_moment
    }
}

/// Sample version of the windowed moment: no mean subtraction.
pub fn estimate_windowed_moment(samples: &[QuadratureSample], window: ConditionWindow) -> Result<WindowEstimate> {
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    let (mut n, mut s1, mut s2) = (0usize, 0.0, 0.0);
    for s in samples.iter().filter(|s| window.contains(s.x2)) {
        n += 1;
        s1 += s.x1;
        s2 += s.x1 * s.x1;
    }
    if n == 0 {
        return Err(Error::EmptyWindow);
    }
    Ok(WindowEstimate { estimate: s2 / n as f64, first_moment: s1 / n as f64, n_in_window: n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub estimate: f64,
    pub first_moment: f64,
    pub n_in_window: usize,
    pub band_lo: f64,
    pub band_hi: f64,
    pub window: ConditionWindow,
    /// `band_hi < 1/2`: squeezing certified at the band level.
    pub violated: bool,
}

/// Estimate plus confidence band for one window.
pub fn witness_report(
    samples: &[QuadratureSample],
    window: ConditionWindow,
    band: &BandConfig,
    seed: u64,
) -> Result<WitnessReport> {
    let est = estimate_windowed_moment(samples, window)?;
    let (band_lo, band_hi) = match band.method {
        BandMethod::Gaussian => confidence_band(est.estimate, est.n_in_window, band.runs, band.k_sigma, seed)?,
        BandMethod::Bootstrap => {
            let accepted: Vec<f64> = samples.iter().filter(|s| window.contains(s.x2)).map(|s| s.x1).collect();
            bootstrap_band(&accepted, band.runs, band.k_sigma, seed)?
        }
    };
    Ok(WitnessReport {
        estimate: est.estimate,
        first_moment: est.first_moment,
        n_in_window: est.n_in_window,
        band_lo,
        band_hi,
        window,
        violated: band_hi < VACUUM_VARIANCE,
    })
}
