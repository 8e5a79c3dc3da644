use std::path::Path;

use hom_witness::analysis::{BandConfig, ConditionWindow};
use hom_witness::fock::{DensityMatrix, FockCutoff};
use hom_witness::homodyne::HomodyneSetting;
use hom_witness::optics::{interfere, PhotonDistribution, SourceModel};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SourceConfig {
    /// Photon-number weights `[p0, p1, ...]` of each arm.
    pub arm1: Vec<f64>,
    pub arm2: Vec<f64>,
    /// Internal-mode overlap ξ.
    pub overlap: f64,
    pub transmittance: f64,
    pub phase: f64,
    /// Drop Fock coherences of the arm states before interference.
    pub dephase: bool,
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self {
            arm1: vec![0.36, 0.64],
            arm2: vec![0.36, 0.64],
            overlap: 1.0,
            transmittance: 0.5,
            phase: 0.0,
            dephase: true,
        }
    }
}

/// A fixed angle, or `"sq"` for the squeezing angle −φ/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Angle {
    Radians(f64),
    Token(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub range: f64,
    pub step: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        let s = HomodyneSetting::default();
        Self { range: s.grid_range, step: s.grid_step }
    }
}

/// `[lo, hi]` on `|x2|`, or an explicit window table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WindowSpec {
    Bounds([f64; 2]),
    Window(ConditionWindow),
}

impl WindowSpec {
    pub fn resolve(&self) -> hom_witness::Result<ConditionWindow> {
        match *self {
            WindowSpec::Bounds([lo, hi]) => ConditionWindow::from_abs_bounds(lo, hi),
            WindowSpec::Window(w) => ConditionWindow::new(w.center, w.width, w.symmetric_abs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub deltas: Vec<f64>,
    pub centers: Vec<f64>,
}

fn steps(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step).round() as usize;
    // rounded so grid values print as typed (0.3, not 0.30000000000000004)
    (0..=n).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect()
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { deltas: steps(0.1, 2.0, 0.1), centers: steps(0.0, 3.0, 0.05) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HomConfig {
    /// Overlaps ξ at which coincidences are evaluated.
    pub overlaps: Vec<f64>,
}

impl Default for HomConfig {
    fn default() -> Self {
        Self { overlaps: vec![1.0, 0.75, 0.5, 0.25, 0.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub source: SourceConfig,
    pub delta_theta: Angle,
    pub n_samples: usize,
    pub seed: u64,
    pub cutoff: usize,
    pub grid: GridConfig,
    pub windows: Vec<WindowSpec>,
    pub sweep: SweepConfig,
    pub band: BandConfig,
    pub hom: HomConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            source: SourceConfig::default(),
            delta_theta: Angle::Radians(0.0),
            n_samples: 12_000,
            seed: 1,
            cutoff: FockCutoff::DEFAULT.n_max(),
            grid: GridConfig::default(),
            windows: vec![WindowSpec::Bounds([1.9, 2.5])],
            sweep: SweepConfig::default(),
            band: BandConfig::default(),
            hom: HomConfig::default(),
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl ExperimentConfig {
    /// Reads a TOML file; `None` gives the defaults.
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let cfg: Self = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        self.source_model()?;
        self.homodyne_setting()?;
        self.windows()?;
        self.fock_cutoff()?;
        if self.n_samples == 0 {
            return Err(invalid("n_samples must be positive"));
        }
        if self.band.runs < 2 || !(self.band.k_sigma >= 0.0) {
            return Err(invalid(format!("band runs {} / k_sigma {}", self.band.runs, self.band.k_sigma)));
        }
        if self.sweep.deltas.iter().any(|d| !(*d > 0.0)) || self.sweep.centers.iter().any(|c| !c.is_finite()) {
            return Err(invalid("sweep widths must be positive and centers finite"));
        }
        if let Some(x) = self.hom.overlaps.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(invalid(format!("overlap {x} outside [0, 1]")));
        }
        Ok(())
    }

    pub fn fock_cutoff(&self) -> CliResult<FockCutoff> {
        FockCutoff::new(self.cutoff).map_err(invalid)
    }

    pub fn source_model(&self) -> CliResult<SourceModel> {
        self.source_with_overlap(self.source.overlap)
    }

    pub fn source_with_overlap(&self, overlap: f64) -> CliResult<SourceModel> {
        let s = &self.source;
        let arm1 = PhotonDistribution::new(s.arm1.clone()).map_err(invalid)?;
        let arm2 = PhotonDistribution::new(s.arm2.clone()).map_err(invalid)?;
        let model = SourceModel::new(&arm1, &arm2, overlap, s.transmittance, s.phase).map_err(invalid)?;
        Ok(if s.dephase { model } else { model.without_dephasing() })
    }

    pub fn delta_theta(&self) -> CliResult<f64> {
        match &self.delta_theta {
            Angle::Radians(x) if x.is_finite() => Ok(*x),
            Angle::Token(t) if t == "sq" => Ok(-self.source.phase / 2.0),
            other => Err(invalid(format!("delta_theta must be a number or \"sq\", got {other:?}"))),
        }
    }

    pub fn homodyne_setting(&self) -> CliResult<HomodyneSetting> {
        HomodyneSetting::new(self.delta_theta()?, self.grid.range, self.grid.step).map_err(invalid)
    }

    pub fn windows(&self) -> CliResult<Vec<ConditionWindow>> {
        self.windows.iter().map(|w| w.resolve().map_err(invalid)).collect()
    }

    /// Two-mode state seen by the homodyne detectors.
    pub fn measured_state(&self) -> CliResult<DensityMatrix> {
        Ok(interfere(&self.source_model()?, self.fock_cutoff()?)?.measured)
    }

    /// SHA-256 of the canonical JSON form of the effective configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}
