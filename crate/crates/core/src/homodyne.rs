//! Homodyne detection of the two output modes.
//!
//! Mode 1 is measured at the local-oscillator phase `Δθ` relative to mode 2,
//! with the convention `⟨x_θ|n⟩ = e^{−inθ} ψ_n(x)`. Rotating the phase of
//! mode 1 in the state and then measuring `X` is the same as measuring
//! `X(Δθ) = X cos Δθ + P sin Δθ`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::DensityMatrix;

/// Largest Fock index accepted by [`psi_n`].
pub const MAX_FOCK_INDEX: usize = 64;

/// Gridded densities must integrate to one within this tolerance.
const LEAKAGE_TOL: f64 = 1e-6;

/// Position-space Fock wavefunction `⟨x|n⟩`.
pub fn psi_n(n: usize, x: f64) -> Result<f64> {
    if n > MAX_FOCK_INDEX {
        return Err(Error::InvalidArgument(format!("Fock index {n} above {MAX_FOCK_INDEX}")));
    }
    if !x.is_finite() {
        return Err(Error::NonFinite("quadrature value"));
    }
    let mut buf = vec![0.0; n + 1];
    psi_fill(x, &mut buf);
    Ok(buf[n])
}

/// `ψ_0(x) ... ψ_{n_max}(x)`.
pub fn psi_all(n_max: usize, x: f64) -> Vec<f64> {
    let mut buf = vec![0.0; n_max + 1];
    psi_fill(x, &mut buf);
    buf
}

/// Upward recurrence `ψ_n = x√(2/n) ψ_{n−1} − √((n−1)/n) ψ_{n−2}`.
pub(crate) fn psi_fill(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    if out.len() > 1 {
        out[1] = std::f64::consts::SQRT_2 * x * out[0];
    }
    for n in 2..out.len() {
        let nf = n as f64;
        out[n] = x * (2.0 / nf).sqrt() * out[n - 1] - ((nf - 1.0) / nf).sqrt() * out[n - 2];
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneSetting {
    /// `θ1 − θ2` in radians.
    pub delta_theta: f64,
    /// Half-width of the sampling grid.
    pub grid_range: f64,
    pub grid_step: f64,
}

impl Default for HomodyneSetting {
    fn default() -> Self {
        Self { delta_theta: 0.0, grid_range: 6.0, grid_step: 0.01 }
    }
}

impl HomodyneSetting {
    pub fn new(delta_theta: f64, grid_range: f64, grid_step: f64) -> Result<Self> {
        let s = Self { delta_theta, grid_range, grid_step };
        s.validate()?;
        Ok(s)
    }

    pub fn at_angle(delta_theta: f64) -> Self {
        Self { delta_theta, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta_theta.is_finite() {
            return Err(Error::NonFinite("local-oscillator phase"));
        }
        if !(self.grid_range > 0.0 && self.grid_step > 0.0) || self.grid_range / self.grid_step < 100.0 {
            return Err(Error::InvalidArgument(format!(
                "grid range {} / step {} must both be positive with at least 100 steps",
                self.grid_range, self.grid_step
            )));
        }
        Ok(())
    }

    fn cells(&self) -> usize {
        (2.0 * self.grid_range / self.grid_step).round() as usize
    }
}

/// One joint homodyne record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSample {
    pub x1: f64,
    pub x2: f64,
}

pub(crate) fn require_two_mode(state: &DensityMatrix) -> Result<()> {
    if state.modes() != 2 {
        return Err(Error::ModeMismatch { expected: 2, got: state.modes() });
    }
    Ok(())
}

/// `Σ_{m,l} ρ_{(n,m),(k,l)} K_{m,l}` for a real symmetric mode-2 kernel.
pub(crate) fn contract_mode2(state: &DensityMatrix, kernel: &DMatrix<f64>) -> DMatrix<Complex64> {
    let d = state.cutoff().dim();
    let rho = state.entries();
    DMatrix::from_fn(d, d, |n, k| {
        let mut acc = Complex64::new(0.0, 0.0);
        for m in 0..d {
            for l in 0..d {
                let w = kernel[(m, l)];
                if w != 0.0 {
                    acc += rho[(n * d + m, k * d + l)] * w;
                }
            }
        }
        acc
    })
}

/// Applies the mode-1 phase factor `e^{−i(n−k)Δθ}`.
pub(crate) fn rotate(mut rc: DMatrix<Complex64>, delta_theta: f64) -> DMatrix<Complex64> {
    if delta_theta != 0.0 {
        for n in 0..rc.nrows() {
            for k in 0..rc.ncols() {
                rc[(n, k)] *= Complex64::from_polar(1.0, -((n as f64) - (k as f64)) * delta_theta);
            }
        }
    }
    rc
}

/// Unnormalized mode-1 state after observing `X2 = x2`.
///
/// The trace equals the marginal density of `x2`. The phase `Δθ` is folded
/// into the returned matrix so that `X` on it means `X(Δθ)`.
pub fn conditional_state(state: &DensityMatrix, delta_theta: f64, x2: f64) -> Result<DensityMatrix> {
    require_two_mode(state)?;
    if !x2.is_finite() || !delta_theta.is_finite() {
        return Err(Error::NonFinite("conditioning value"));
    }
    let psi = psi_all(state.cutoff().n_max(), x2);
    let kernel = DMatrix::from_fn(psi.len(), psi.len(), |m, l| psi[m] * psi[l]);
    let rc = rotate(contract_mode2(state, &kernel), delta_theta);
    Ok(DensityMatrix::from_raw(rc, state.cutoff(), 1))
}

/// `ψ^T Re(M) ψ`: the position density of a single-mode matrix at one point.
fn quadratic_form(m: &DMatrix<Complex64>, psi: &[f64]) -> f64 {
    let mut acc = 0.0;
    for n in 0..psi.len() {
        let mut row = 0.0;
        for k in 0..psi.len() {
            row += m[(n, k)].re * psi[k];
        }
        acc += psi[n] * row;
    }
    acc
}

/// Joint density `P(x1, x2)` of the quadratures `X1(Δθ)` and `X2(0)`.
pub fn joint_density(state: &DensityMatrix, delta_theta: f64, x1: f64, x2: f64) -> Result<f64> {
    if !x1.is_finite() {
        return Err(Error::NonFinite("quadrature value"));
    }
    let rc = conditional_state(state, delta_theta, x2)?;
    let psi = psi_all(state.cutoff().n_max(), x1);
    Ok(quadratic_form(rc.entries(), &psi).max(0.0))
}

/// Grid inverse-CDF sampler for one state and setting.
///
/// `x2` is drawn from the gridded marginal, then `x1` from the gridded
/// conditional of the chosen `x2` cell; both are jittered uniformly inside
/// their cell. Building the sampler is the expensive part, so reuse it for
/// repeated draws.
#[derive(Debug, Clone)]
pub struct QuadratureSampler {
    start: f64,
    step: f64,
    x2_cdf: Vec<f64>,
    x1_cdfs: Vec<Vec<f64>>,
}

fn cumulative(masses: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut cdf = vec![0.0];
    let mut acc = 0.0;
    for m in masses {
        acc += m.max(0.0);
        cdf.push(acc);
    }
    cdf
}

fn normalize_cdf(cdf: &mut [f64]) {
    let total = *cdf.last().unwrap();
    if total > 0.0 {
        cdf.iter_mut().for_each(|c| *c /= total);
    } else {
        let n = cdf.len() - 1;
        cdf.iter_mut().enumerate().for_each(|(i, c)| *c = i as f64 / n as f64);
    }
}

fn pick_cell(cdf: &[f64], u: f64) -> usize {
    let j = cdf.partition_point(|&c| c <= u);
    j.clamp(1, cdf.len() - 1) - 1
}

impl QuadratureSampler {
    pub fn new(state: &DensityMatrix, setting: &HomodyneSetting) -> Result<Self> {
        require_two_mode(state)?;
        setting.validate()?;
        let n_max = state.cutoff().n_max();
        let cells = setting.cells();
        let step = setting.grid_step;
        let start = -setting.grid_range;
        let mids: Vec<f64> = (0..cells).map(|i| start + (i as f64 + 0.5) * step).collect();
        let psi: Vec<Vec<f64>> = mids.iter().map(|&x| psi_all(n_max, x)).collect();

        let per_cell: Vec<(f64, Vec<f64>)> = psi
            .par_iter()
            .map(|psi2| {
                let kernel = DMatrix::from_fn(psi2.len(), psi2.len(), |m, l| psi2[m] * psi2[l]);
                let rc = rotate(contract_mode2(state, &kernel), setting.delta_theta);
                let marginal = rc.diagonal().iter().map(|c| c.re).sum::<f64>();
                let mut cdf = cumulative(psi.iter().map(|psi1| quadratic_form(&rc, psi1)));
                normalize_cdf(&mut cdf);
                (marginal.max(0.0), cdf)
            })
            .collect();

        let mass: f64 = per_cell.iter().map(|(m, _)| m * step).sum();
        if !mass.is_finite() || (mass - 1.0).abs() > LEAKAGE_TOL {
            return Err(Error::Leakage((mass - 1.0).abs()));
        }
        let mut x2_cdf = cumulative(per_cell.iter().map(|(m, _)| *m));
        normalize_cdf(&mut x2_cdf);
        let x1_cdfs = per_cell.into_iter().map(|(_, cdf)| cdf).collect();
        Ok(Self { start, step, x2_cdf, x1_cdfs })
    }

    /// Draws `n` records; identical seeds give identical output.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<QuadratureSample>> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample count must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out = (0..n)
            .map(|_| {
                let i2 = pick_cell(&self.x2_cdf, rng.random::<f64>());
                let x2 = self.start + (i2 as f64 + rng.random::<f64>()) * self.step;
                let i1 = pick_cell(&self.x1_cdfs[i2], rng.random::<f64>());
                let x1 = self.start + (i1 as f64 + rng.random::<f64>()) * self.step;
                QuadratureSample { x1, x2 }
            })
            .collect();
        Ok(out)
    }
}

/// Builds a sampler and draws `n` records from it.
pub fn sample(state: &DensityMatrix, setting: &HomodyneSetting, n: usize, seed: u64) -> Result<Vec<QuadratureSample>> {
    QuadratureSampler::new(state, setting)?.sample(n, seed)
}
