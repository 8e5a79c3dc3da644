//! Photon sources, phase randomization and beam-splitter interference.
//!
//! Distinguishability is modeled with two internal modes per spatial arm.
//! The photon(s) in arm 2 occupy the internal mode matched to arm 1 with
//! amplitude `ξ` and an orthogonal internal mode with amplitude `√(1−ξ²)`.
//! The beam splitter acts identically on both internal modes. Homodyne
//! detection only sees the matched internal mode; APDs are broadband and see
//! both, which is why [`InterferenceState`] keeps the orthogonal-mode photon
//! counts next to the measured-mode state.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockCutoff, Operator, PureState};

/// Input weights below this are treated as absent.
const WEIGHT_FLOOR: f64 = 1e-15;

/// Photon-number distribution `(p0, p1, p2, ...)` of one source arm.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution(Vec<f64>);

impl PhotonDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("empty".into()));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidDistribution(format!("weight {w} is not a nonnegative number")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("weights sum to {sum}")));
        }
        Ok(Self(weights))
    }

    pub fn vacuum() -> Self {
        Self(vec![1.0])
    }

    pub fn single_photon() -> Self {
        Self(vec![0.0, 1.0])
    }

    /// `η|1⟩⟨1| + (1−η)|0⟩⟨0|`.
    pub fn imperfect_photon(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidDistribution(format!("efficiency {eta} outside [0, 1]")));
        }
        Ok(Self(vec![1.0 - eta, eta]))
    }

    /// Poisson statistics of a phase-randomized coherent state, truncated
    /// after `n_max` photons and renormalized.
    pub fn poisson(mean: f64, n_max: usize) -> Result<Self> {
        if !mean.is_finite() || mean < 0.0 {
            return Err(Error::InvalidDistribution(format!("mean {mean}")));
        }
        let mut w = Vec::with_capacity(n_max + 1);
        let mut term = (-mean).exp();
        for n in 0..=n_max {
            if n > 0 {
                term *= mean / n as f64;
            }
            w.push(term);
        }
        let sum: f64 = w.iter().sum();
        w.iter_mut().for_each(|p| *p /= sum);
        Ok(Self(w))
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    /// Highest photon number with nonzero weight.
    pub fn max_photons(&self) -> usize {
        self.0.iter().rposition(|&w| w > 0.0).unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }
}

/// Diagonal single-mode state with the given photon-number weights.
pub fn make_arm_state(dist: &PhotonDistribution, cutoff: FockCutoff) -> Result<DensityMatrix> {
    cutoff.check(dist.max_photons())?;
    let weights = &dist.weights()[..=dist.max_photons()];
    DensityMatrix::diagonal(weights, cutoff)
}

/// Uniform optical phase average: removes all Fock coherences.
///
/// For several modes each one is randomized independently, which leaves only
/// the diagonal of the product basis.
pub fn dephase(rho: &DensityMatrix) -> DensityMatrix {
    let mut entries = rho.entries().clone();
    let d = entries.nrows();
    for i in 0..d {
        for j in 0..d {
            if i != j {
                entries[(i, j)] = Complex64::new(0.0, 0.0);
            }
        }
    }
    DensityMatrix::from_raw(entries, rho.cutoff(), rho.modes())
}

/// Creation-operator map of the beam splitter.
///
/// `a† → √T a† + √(1−T) e^{iφ/2} b†` and `b† → √(1−T) a† − √T e^{iφ/2} b†`.
/// At `T = 1/2` the input `|1,1⟩` becomes `(|2,0⟩ − e^{iφ}|0,2⟩)/√2`.
fn creation_map(transmittance: f64, phase: f64) -> [[Complex64; 2]; 2] {
    let t = Complex64::new(transmittance.sqrt(), 0.0);
    let r = Complex64::new((1.0 - transmittance).sqrt(), 0.0);
    let out = Complex64::from_polar(1.0, 0.5 * phase);
    [[t, r * out], [r, -t * out]]
}

fn check_transmittance(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("transmittance {t} outside [0, 1]")));
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Two-mode Fock-basis matrix of the beam splitter.
///
/// The matrix is block diagonal in total photon number `N`. Blocks with
/// `N ≤ n_max` are exactly unitary; higher blocks are cut by the truncation.
pub fn beamsplitter_matrix(transmittance: f64, phase: f64, cutoff: FockCutoff) -> Result<Operator> {
    check_transmittance(transmittance)?;
    if !phase.is_finite() {
        return Err(Error::NonFinite("beam-splitter phase"));
    }
    let [[u00, u01], [u10, u11]] = creation_map(transmittance, phase);
    let d = cutoff.dim();
    let mut u = DMatrix::zeros(d * d, d * d);
    for n in 0..d {
        for m in 0..d {
            let col = n * d + m;
            let norm = (factorial(n) * factorial(m)).sqrt();
            // (u00 a† + u01 b†)^n (u10 a† + u11 b†)^m
            for j in 0..=n {
                for k in 0..=m {
                    let p = j + k;
                    let q = n + m - p;
                    if p >= d || q >= d {
                        continue;
                    }
                    let coef = u00.powu(j as u32)
                        * u01.powu((n - j) as u32)
                        * u10.powu(k as u32)
                        * u11.powu((m - k) as u32)
                        * (binomial(n, j) * binomial(m, k));
                    u[(p * d + q, col)] += coef * ((factorial(p) * factorial(q)).sqrt() / norm);
                }
            }
        }
    }
    Ok(u)
}

/// Configuration of the two-photon experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceModel {
    arm1: DensityMatrix,
    arm2: DensityMatrix,
    overlap: f64,
    transmittance: f64,
    phase: f64,
    dephase: bool,
}

impl SourceModel {
    pub fn new(
        arm1: &PhotonDistribution,
        arm2: &PhotonDistribution,
        overlap: f64,
        transmittance: f64,
        phase: f64,
    ) -> Result<Self> {
        let arm_cutoff = |d: &PhotonDistribution| FockCutoff::new(d.max_photons().max(2));
        Self::from_arm_states(
            make_arm_state(arm1, arm_cutoff(arm1)?)?,
            make_arm_state(arm2, arm_cutoff(arm2)?)?,
            overlap,
            transmittance,
            phase,
        )
    }

    /// Two perfect, indistinguishable single photons on a balanced splitter.
    pub fn ideal(phase: f64) -> Self {
        Self::new(&PhotonDistribution::single_photon(), &PhotonDistribution::single_photon(), 1.0, 0.5, phase)
            .expect("ideal source is valid")
    }

    /// Both arms `η|1⟩⟨1| + (1−η)|0⟩⟨0|`, balanced splitter.
    pub fn imperfect(eta: f64, overlap: f64, phase: f64) -> Result<Self> {
        let arm = PhotonDistribution::imperfect_photon(eta)?;
        Self::new(&arm, &arm, overlap, 0.5, phase)
    }

    /// Arms given as arbitrary single-mode states.
    pub fn from_arm_states(
        arm1: DensityMatrix,
        arm2: DensityMatrix,
        overlap: f64,
        transmittance: f64,
        phase: f64,
    ) -> Result<Self> {
        for arm in [&arm1, &arm2] {
            if arm.modes() != 1 {
                return Err(Error::ModeMismatch { expected: 1, got: arm.modes() });
            }
            arm.validate()?;
        }
        if !(0.0..=1.0).contains(&overlap) {
            return Err(Error::InvalidArgument(format!("overlap {overlap} outside [0, 1]")));
        }
        check_transmittance(transmittance)?;
        if !phase.is_finite() {
            return Err(Error::NonFinite("beam-splitter phase"));
        }
        Ok(Self { arm1, arm2, overlap, transmittance, phase, dephase: true })
    }

    pub fn with_overlap(mut self, overlap: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&overlap) {
            return Err(Error::InvalidArgument(format!("overlap {overlap} outside [0, 1]")));
        }
        self.overlap = overlap;
        Ok(self)
    }

    /// Skips the input phase randomization. Only meant for demonstrating the
    /// false positives that phase-sensitive inputs produce.
    pub fn without_dephasing(mut self) -> Self {
        self.dephase = false;
        self
    }

    pub fn arm1(&self) -> &DensityMatrix {
        &self.arm1
    }

    pub fn arm2(&self) -> &DensityMatrix {
        &self.arm2
    }

    pub fn overlap(&self) -> f64 {
        self.overlap
    }

    pub fn transmittance(&self) -> f64 {
        self.transmittance
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn dephasing(&self) -> bool {
        self.dephase
    }

    /// Local-oscillator phase difference at which the conditional moment is
    /// smallest.
    pub fn squeezing_angle(&self) -> f64 {
        -0.5 * self.phase
    }

    /// Smallest cutoff that holds every output of [`interfere`] exactly.
    pub fn required_cutoff(&self) -> usize {
        self.arm1.photon_support(0.0) + self.arm2.photon_support(0.0)
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.arm1.mean_photon_number() + self.arm2.mean_photon_number()
    }
}

/// One pure component of the post-splitter state.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub weight: f64,
    /// Normalized two-mode state of the matched internal mode.
    pub component: PureState,
    /// Photons in the orthogonal internal mode of spatial arms 1 and 2.
    pub orthogonal: [usize; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceState {
    /// Two-mode state seen by the homodyne detectors.
    pub measured: DensityMatrix,
    pub branches: Vec<Branch>,
}

impl InterferenceState {
    /// Mean photon number of all four output modes.
    pub fn mean_photon_number(&self) -> f64 {
        self.branches
            .iter()
            .map(|b| {
                let matched = b.component.to_density().mean_photon_number();
                b.weight * (matched + (b.orthogonal[0] + b.orthogonal[1]) as f64)
            })
            .sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum()
    }
}

// Output modes of the four-mode computation.
const M1: usize = 0;
const M2: usize = 1;
const O1: usize = 2;
const O2: usize = 3;

type Monomial = [u8; 4];

/// Polynomial in the four output creation operators.
#[derive(Debug, Clone, Default)]
struct Poly(BTreeMap<Monomial, Complex64>);

impl Poly {
    fn one() -> Self {
        Self(BTreeMap::from([([0; 4], Complex64::new(1.0, 0.0))]))
    }

    fn linear(form: [Complex64; 4]) -> Self {
        let mut terms = BTreeMap::new();
        for (mode, coef) in form.into_iter().enumerate() {
            if coef != Complex64::new(0.0, 0.0) {
                let mut mono = [0; 4];
                mono[mode] = 1;
                terms.insert(mono, coef);
            }
        }
        Self(terms)
    }

    fn mul(&self, other: &Poly) -> Poly {
        let mut out: BTreeMap<Monomial, Complex64> = BTreeMap::new();
        for (ma, ca) in &self.0 {
            for (mb, cb) in &other.0 {
                let mono = [ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2], ma[3] + mb[3]];
                *out.entry(mono).or_default() += ca * cb;
            }
        }
        Poly(out)
    }

    fn pow(&self, k: usize) -> Poly {
        (0..k).fold(Poly::one(), |acc, _| acc.mul(self))
    }

    /// Converts `Π c_i^{e_i}|0⟩` into normalized Fock amplitudes.
    fn into_fock(self) -> BTreeMap<Monomial, Complex64> {
        self.0
            .into_iter()
            .map(|(mono, c)| {
                let f: f64 = mono.iter().map(|&e| factorial(e as usize)).product();
                (mono, c * f.sqrt())
            })
            .collect()
    }
}

/// Four-mode output amplitudes for Fock inputs, memoized per `(n1, n2)`.
struct FourModeSplitter {
    arm1_form: Poly,
    arm2_form: Poly,
    cache: HashMap<(usize, usize), BTreeMap<Monomial, Complex64>>,
}

impl FourModeSplitter {
    fn new(transmittance: f64, phase: f64, overlap: f64) -> Self {
        let [[u00, u01], [u10, u11]] = creation_map(transmittance, phase);
        let zero = Complex64::new(0.0, 0.0);
        let xi = Complex64::new(overlap, 0.0);
        let perp = Complex64::new((1.0 - overlap * overlap).max(0.0).sqrt(), 0.0);
        let mut arm1 = [zero; 4];
        arm1[M1] = u00;
        arm1[M2] = u01;
        let mut arm2 = [zero; 4];
        arm2[M1] = xi * u10;
        arm2[M2] = xi * u11;
        arm2[O1] = perp * u10;
        arm2[O2] = perp * u11;
        Self { arm1_form: Poly::linear(arm1), arm2_form: Poly::linear(arm2), cache: HashMap::new() }
    }

    fn output(&mut self, n1: usize, n2: usize) -> &BTreeMap<Monomial, Complex64> {
        let (f1, f2) = (&self.arm1_form, &self.arm2_form);
        self.cache.entry((n1, n2)).or_insert_with(|| {
            let norm = (factorial(n1) * factorial(n2)).sqrt();
            let mut poly = f1.pow(n1).mul(&f2.pow(n2));
            poly.0.values_mut().for_each(|c| *c /= norm);
            poly.into_fock()
        })
    }
}

/// Pure-state decomposition `(weight, Fock amplitudes)` of an arm.
fn arm_components(arm: &DensityMatrix, dephase: bool) -> Vec<(f64, Vec<Complex64>)> {
    let d = arm.dim();
    if dephase {
        return arm
            .populations()
            .into_iter()
            .enumerate()
            .filter(|(_, p)| *p > WEIGHT_FLOOR)
            .map(|(n, p)| {
                let mut v = vec![Complex64::new(0.0, 0.0); d];
                v[n] = Complex64::new(1.0, 0.0);
                (p, v)
            })
            .collect();
    }
    let herm = (arm.entries() + arm.entries().adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(herm);
    eig.eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &l)| l > WEIGHT_FLOOR)
        .map(|(i, &l)| (l, eig.eigenvectors.column(i).iter().copied().collect()))
        .collect()
}

/// Mixes the two arms on the beam splitter.
///
/// Arm states are phase randomized first unless the source was built with
/// [`SourceModel::without_dephasing`].
pub fn interfere(source: &SourceModel, cutoff: FockCutoff) -> Result<InterferenceState> {
    let needed = source.required_cutoff();
    if needed > cutoff.n_max() {
        return Err(Error::CutoffOverflow { needed, n_max: cutoff.n_max() });
    }
    let d = cutoff.dim();
    let arm1 = arm_components(&source.arm1, source.dephase);
    let arm2 = arm_components(&source.arm2, source.dephase);
    let mut splitter = FourModeSplitter::new(source.transmittance, source.phase, source.overlap);

    let mut branches = Vec::new();
    let mut measured = DMatrix::<Complex64>::zeros(d * d, d * d);
    for (w1, e1) in &arm1 {
        for (w2, e2) in &arm2 {
            // matched-mode vectors grouped by orthogonal occupation
            let mut groups: BTreeMap<[usize; 2], DVector<Complex64>> = BTreeMap::new();
            for (n1, c1) in e1.iter().enumerate().filter(|(_, c)| c.norm_sqr() > 0.0) {
                for (n2, c2) in e2.iter().enumerate().filter(|(_, c)| c.norm_sqr() > 0.0) {
                    for (mono, amp) in splitter.output(n1, n2) {
                        let key = [mono[O1] as usize, mono[O2] as usize];
                        let v = groups.entry(key).or_insert_with(|| DVector::zeros(d * d));
                        v[mono[M1] as usize * d + mono[M2] as usize] += c1 * c2 * amp;
                    }
                }
            }
            for (orthogonal, v) in groups {
                let norm_sqr = v.norm_squared();
                if norm_sqr <= 1e-300 {
                    continue;
                }
                let weight = w1 * w2 * norm_sqr;
                let component = PureState::from_amplitudes(v.unscale(norm_sqr.sqrt()), cutoff, 2)?;
                let a = component.amplitudes();
                measured.gerc(weight.into(), a, a, 1.0.into());
                branches.push(Branch { weight, component, orthogonal });
            }
        }
    }
    let total: f64 = branches.iter().map(|b| b.weight).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidState(format!("branch weights sum to {total}")));
    }
    Ok(InterferenceState { measured: DensityMatrix::from_raw(measured, cutoff, 2), branches })
}
