//! Simulation and analysis of phase-sensitive Hong-Ou-Mandel interference.
//!
//! Two photons (possibly imperfect, possibly distinguishable) are mixed on a
//! beam splitter and both outputs are measured by homodyne detectors. The
//! crate provides
//!
//! * [`fock`]: truncated Fock-space states and operator matrices,
//! * [`optics`]: photon sources, dephasing and beam-splitter interference,
//! * [`homodyne`]: quadrature wavefunctions, joint/conditional densities and
//!   a seeded sampler,
//! * [`analysis`]: APD coincidences and visibility, the conditional second
//!   moment witness, Monte Carlo confidence bands and the post-selection
//!   window sweep.
//!
//! Quadratures use `X = (a + a†)/√2`, so the vacuum variance is 1/2.

pub mod analysis;
pub mod error;
pub mod fock;
pub mod homodyne;
pub mod optics;
#[cfg(test)]
mod oracle;
mod quad;

pub use error::{Error, Result};
pub use num_complex::Complex64;
