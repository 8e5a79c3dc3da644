use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::InterferenceState;

/// Joint click statistics of two on/off detectors. `p_kj` has `k` for arm 1
/// and `j` for arm 2, with 0 = no click.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceTable {
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
}

impl CoincidenceTable {
    pub fn sum(&self) -> f64 {
        self.p00 + self.p01 + self.p10 + self.p11
    }
}

/// APD statistics with POVM `{|0⟩⟨0|, 1 − |0⟩⟨0|}` per spatial arm.
///
/// The detectors are broadband: an arm clicks if it holds a photon in either
/// internal mode.
pub fn apd_probabilities(state: &InterferenceState) -> CoincidenceTable {
    let mut p00 = 0.0;
    let mut dark1 = 0.0;
    let mut dark2 = 0.0;
    for b in &state.branches {
        let d = b.component.cutoff().dim();
        let amps = b.component.amplitudes();
        let [o1, o2] = b.orthogonal;
        if o1 == 0 {
            dark1 += b.weight * (0..d).map(|m| amps[m].norm_sqr()).sum::<f64>();
        }
        if o2 == 0 {
            dark2 += b.weight * (0..d).map(|n| amps[n * d].norm_sqr()).sum::<f64>();
        }
        if o1 == 0 && o2 == 0 {
            p00 += b.weight * amps[0].norm_sqr();
        }
    }
    let p01 = (dark1 - p00).max(0.0);
    let p10 = (dark2 - p00).max(0.0);
    CoincidenceTable { p00, p01, p10, p11: (1.0 - p00 - p01 - p10).max(0.0) }
}

/// `(max − min) / (max + min)` over a delay sweep of coincidence probabilities.
pub fn visibility(p11_values: &[f64]) -> Result<f64> {
    if p11_values.is_empty() {
        return Err(Error::InvalidArgument("visibility needs at least one value".into()));
    }
    if let Some(p) = p11_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidArgument(format!("coincidence probability {p} outside [0, 1]")));
    }
    let max = p11_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = p11_values.iter().copied().fold(f64::INFINITY, f64::min);
    if max <= 0.0 {
        return Err(Error::InvalidArgument("visibility undefined: no coincidences at any setting".into()));
    }
    Ok((max - min) / (max + min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockCutoff;
    use crate::optics::{interfere, PhotonDistribution, SourceModel};

    fn table(source: &SourceModel) -> CoincidenceTable {
        apd_probabilities(&interfere(source, FockCutoff::DEFAULT).unwrap())
    }

    #[test]
    fn hom_limits() {
        let ideal = table(&SourceModel::ideal(0.0));
        assert!(ideal.p11.abs() < 1e-12);
        let dist = table(&SourceModel::ideal(0.0).with_overlap(0.0).unwrap());
        assert!((dist.p11 - 0.5).abs() < 1e-12);
        for xi in [0.0, 0.25, 0.5, 0.6, 0.75, 1.0] {
            let t = table(&SourceModel::ideal(0.3).with_overlap(xi).unwrap());
            let oracle = crate::oracle::four_mode_p11(&SourceModel::ideal(0.3).with_overlap(xi).unwrap(), FockCutoff::new(2).unwrap());
            assert!((t.p11 - oracle).abs() < 1e-10);
            assert!((t.p11 - (1.0 - xi * xi) / 2.0).abs() < 1e-10);
            assert!((t.sum() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn vacuum_admixture_keeps_full_visibility() {
        let p = [1.0, 0.0].map(|xi| table(&SourceModel::imperfect(0.8, xi, 0.0).unwrap()).p11);
        assert!(p[0].abs() < 1e-12);
        assert!((p[1] - 0.64 * 0.5).abs() < 1e-12);
        assert!((visibility(&p).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_photon_terms_reduce_visibility() {
        let arm = PhotonDistribution::new(vec![0.1, 0.8, 0.1]).unwrap();
        let p: Vec<f64> = [1.0, 0.0]
            .iter()
            .map(|&xi| table(&SourceModel::new(&arm, &arm, xi, 0.5, 0.0).unwrap()).p11)
            .collect();
        let v = visibility(&p).unwrap();
        assert!(v < 1.0 && v > 0.5);
    }

    #[test]
    fn normalization_over_configurations() {
        let arms = [vec![0.0, 1.0], vec![0.5, 0.5], vec![0.2, 0.5, 0.3]];
        for a in &arms {
            for b in &arms {
                for xi in [0.0, 0.4, 1.0] {
                    let s = SourceModel::new(
                        &PhotonDistribution::new(a.clone()).unwrap(),
                        &PhotonDistribution::new(b.clone()).unwrap(),
                        xi,
                        0.35,
                        0.2,
                    )
                    .unwrap();
                    let t = table(&s);
                    assert!((t.sum() - 1.0).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn visibility_examples() {
        assert_eq!(visibility(&[0.0, 0.5]).unwrap(), 1.0);
        assert_eq!(visibility(&[0.3, 0.3]).unwrap(), 0.0);
        assert_eq!(visibility(&[0.25]).unwrap(), 0.0);
        assert!(visibility(&[0.0, 0.0]).is_err());
        assert!(visibility(&[]).is_err());
        assert!(visibility(&[1.5]).is_err());
    }
}
