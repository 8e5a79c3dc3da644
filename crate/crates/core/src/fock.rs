//! Truncated Fock-space states and operators.
//!
//! Multi-mode states are stored densely. The basis index of an occupation
//! tuple `(n1, n2, ...)` is row-major with mode 1 as the slowest index, so a
//! two-mode index is `n1 * (n_max + 1) + n2`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Operator = DMatrix<Complex64>;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-9;
const PSD_FLOOR: f64 = -1e-9;

/// Highest retained Fock index per mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FockCutoff(usize);

impl FockCutoff {
    pub const DEFAULT: FockCutoff = FockCutoff(6);

    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(Error::InvalidCutoff(n_max));
        }
        Ok(FockCutoff(n_max))
    }

    pub fn n_max(self) -> usize {
        self.0
    }

    /// Single-mode basis dimension.
    pub fn dim(self) -> usize {
        self.0 + 1
    }

    pub fn dim_modes(self, modes: usize) -> usize {
        self.dim().pow(modes as u32)
    }

    pub fn check(self, n: usize) -> Result<()> {
        if n > self.0 {
            return Err(Error::CutoffOverflow { needed: n, n_max: self.0 });
        }
        Ok(())
    }

    /// Basis index of an occupation tuple.
    pub fn index(self, occupations: &[usize]) -> Result<usize> {
        let d = self.dim();
        let mut idx = 0;
        for &n in occupations {
            self.check(n)?;
            idx = idx * d + n;
        }
        Ok(idx)
    }

    /// Inverse of [`FockCutoff::index`].
    pub fn occupations(self, mut index: usize, modes: usize) -> Vec<usize> {
        let d = self.dim();
        let mut occ = vec![0; modes];
        for slot in occ.iter_mut().rev() {
            *slot = index % d;
            index /= d;
        }
        occ
    }
}

impl Default for FockCutoff {
    fn default() -> Self {
        Self::DEFAULT
    }
}

fn check_same_cutoff(a: FockCutoff, b: FockCutoff) -> Result<()> {
    if a != b {
        return Err(Error::CutoffMismatch(a.n_max(), b.n_max()));
    }
    Ok(())
}

/// Kronecker composition of states or operators. The left operand becomes
/// the slow (leading) index.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Result<Self>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: DVector<Complex64>,
    cutoff: FockCutoff,
    modes: usize,
}

impl PureState {
    /// Fock state `|n1, n2, ...⟩`.
    pub fn fock(occupations: &[usize], cutoff: FockCutoff) -> Result<Self> {
        let modes = occupations.len();
        if modes == 0 {
            return Err(Error::InvalidArgument("at least one mode required".into()));
        }
        let mut amplitudes = DVector::zeros(cutoff.dim_modes(modes));
        amplitudes[cutoff.index(occupations)?] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes, cutoff, modes })
    }

    pub fn vacuum(modes: usize, cutoff: FockCutoff) -> Result<Self> {
        Self::fock(&vec![0; modes], cutoff)
    }

    /// Wraps raw amplitudes without normalizing.
    pub fn from_amplitudes(
        amplitudes: DVector<Complex64>,
        cutoff: FockCutoff,
        modes: usize,
    ) -> Result<Self> {
        if modes == 0 || amplitudes.len() != cutoff.dim_modes(modes) {
            return Err(Error::InvalidState(format!(
                "{} amplitudes do not match {} mode(s) at n_max = {}",
                amplitudes.len(),
                modes,
                cutoff.n_max()
            )));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        Ok(Self { amplitudes, cutoff, modes })
    }

    pub fn normalize(&self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector cannot be normalized".into()));
        }
        Ok(Self {
            amplitudes: self.amplitudes.unscale(norm),
            ..self.clone()
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn amplitude(&self, occupations: &[usize]) -> Result<Complex64> {
        if occupations.len() != self.modes {
            return Err(Error::ModeMismatch { expected: self.modes, got: occupations.len() });
        }
        Ok(self.amplitudes[self.cutoff.index(occupations)?])
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix::from_raw(
            &self.amplitudes * self.amplitudes.adjoint(),
            self.cutoff,
            self.modes,
        )
    }
}

impl Tensor for PureState {
    fn tensor(&self, other: &Self) -> Result<Self> {
        check_same_cutoff(self.cutoff, other.cutoff)?;
        Ok(Self {
            amplitudes: self.amplitudes.kronecker(&other.amplitudes),
            cutoff: self.cutoff,
            modes: self.modes + other.modes,
        })
    }
}

/// Density operator on one or more truncated modes.
///
/// Values built through [`DensityMatrix::from_entries`] are validated
/// (Hermitian, unit trace, positive semidefinite). Intermediate results such
/// as conditional states may carry a trace different from one; use
/// [`DensityMatrix::normalize`] to rescale them.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: DMatrix<Complex64>,
    cutoff: FockCutoff,
    modes: usize,
}

impl DensityMatrix {
    pub(crate) fn from_raw(entries: DMatrix<Complex64>, cutoff: FockCutoff, modes: usize) -> Self {
        debug_assert_eq!(entries.nrows(), cutoff.dim_modes(modes));
        Self { entries, cutoff, modes }
    }

    pub fn from_entries(entries: DMatrix<Complex64>, cutoff: FockCutoff, modes: usize) -> Result<Self> {
        let dim = cutoff.dim_modes(modes);
        if modes == 0 || entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::InvalidState(format!(
                "matrix is {}x{}, expected {dim}x{dim}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let rho = Self { entries, cutoff, modes };
        rho.validate()?;
        Ok(rho)
    }

    pub fn fock(occupations: &[usize], cutoff: FockCutoff) -> Result<Self> {
        Ok(PureState::fock(occupations, cutoff)?.to_density())
    }

    pub fn vacuum(modes: usize, cutoff: FockCutoff) -> Result<Self> {
        Ok(PureState::vacuum(modes, cutoff)?.to_density())
    }

    /// Single-mode state diagonal in the Fock basis.
    pub fn diagonal(weights: &[f64], cutoff: FockCutoff) -> Result<Self> {
        if weights.len() > cutoff.dim() {
            return Err(Error::CutoffOverflow { needed: weights.len() - 1, n_max: cutoff.n_max() });
        }
        let mut entries = DMatrix::zeros(cutoff.dim(), cutoff.dim());
        for (n, &w) in weights.iter().enumerate() {
            entries[(n, n)] = Complex64::new(w, 0.0);
        }
        Self::from_entries(entries, cutoff, 1)
    }

    /// Checks Hermiticity, finiteness, unit trace and positivity.
    pub fn validate(&self) -> Result<()> {
        if self.entries.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite("density matrix entries"));
        }
        let dev = hermitian_deviation(&self.entries);
        if dev > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {dev:.3e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < PSD_FLOOR {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.entries + self.entries.adjoint()).scale(0.5);
        SymmetricEigen::new(herm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn normalize(&self) -> Result<Self> {
        let tr = self.trace();
        if !tr.is_finite() || tr <= 0.0 {
            return Err(Error::InvalidState(format!("trace {tr} cannot be normalized")));
        }
        Ok(Self { entries: self.entries.unscale(tr), ..self.clone() })
    }

    pub fn trace(&self) -> f64 {
        self.entries.diagonal().iter().map(|a| a.re).sum()
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn get(&self, row: &[usize], col: &[usize]) -> Result<Complex64> {
        for occ in [row, col] {
            if occ.len() != self.modes {
                return Err(Error::ModeMismatch { expected: self.modes, got: occ.len() });
            }
        }
        Ok(self.entries[(self.cutoff.index(row)?, self.cutoff.index(col)?)])
    }

    pub fn cutoff(&self) -> FockCutoff {
        self.cutoff
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// Photon-number probabilities of the whole state, indexed like the basis.
    pub fn populations(&self) -> Vec<f64> {
        self.entries.diagonal().iter().map(|a| a.re).collect()
    }

    /// Largest Fock index (in any mode) carrying population above `tol`.
    pub fn photon_support(&self, tol: f64) -> usize {
        self.populations()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > tol)
            .map(|(i, _)| self.cutoff.occupations(i, self.modes).into_iter().sum::<usize>())
            .max()
            .unwrap_or(0)
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.populations()
            .iter()
            .enumerate()
            .map(|(i, p)| p * self.cutoff.occupations(i, self.modes).iter().sum::<usize>() as f64)
            .sum()
    }

    /// Traces out `mode` (1-based).
    pub fn partial_trace(&self, mode: usize) -> Result<Self> {
        if self.modes < 2 {
            return Err(Error::ModeMismatch { expected: 2, got: self.modes });
        }
        if mode == 0 || mode > self.modes {
            return Err(Error::InvalidArgument(format!("mode {mode} out of range 1..={}", self.modes)));
        }
        let d = self.cutoff.dim();
        // index = (outer * d + traced) * inner + rest
        let inner = d.pow((self.modes - mode) as u32);
        let outer = d.pow((mode - 1) as u32);
        let reduced_dim = outer * inner;
        let mut out = DMatrix::zeros(reduced_dim, reduced_dim);
        for o1 in 0..outer {
            for i1 in 0..inner {
                let r = o1 * inner + i1;
                for o2 in 0..outer {
                    for i2 in 0..inner {
                        let c = o2 * inner + i2;
                        let mut acc = Complex64::new(0.0, 0.0);
                        for t in 0..d {
                            acc += self.entries[((o1 * d + t) * inner + i1, (o2 * d + t) * inner + i2)];
                        }
                        out[(r, c)] = acc;
                    }
                }
            }
        }
        Ok(Self { entries: out, cutoff: self.cutoff, modes: self.modes - 1 })
    }
}

impl Tensor for DensityMatrix {
    fn tensor(&self, other: &Self) -> Result<Self> {
        check_same_cutoff(self.cutoff, other.cutoff)?;
        Ok(Self {
            entries: self.entries.kronecker(&other.entries),
            cutoff: self.cutoff,
            modes: self.modes + other.modes,
        })
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> Result<T> {
    a.tensor(b)
}

pub(crate) fn hermitian_deviation(m: &DMatrix<Complex64>) -> f64 {
    let mut dev = 0.0f64;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Annihilation operator `a` on one mode.
pub fn annihilation_matrix(cutoff: FockCutoff) -> Operator {
    let d = cutoff.dim();
    let mut a = DMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

pub fn number_matrix(cutoff: FockCutoff) -> Operator {
    DMatrix::from_fn(cutoff.dim(), cutoff.dim(), |i, j| {
        if i == j { Complex64::new(i as f64, 0.0) } else { Complex64::new(0.0, 0.0) }
    })
}

/// `X = (a + a†)/√2`.
pub fn x_matrix(cutoff: FockCutoff) -> Operator {
    let a = annihilation_matrix(cutoff);
    (&a + a.adjoint()).unscale(std::f64::consts::SQRT_2)
}

/// `P = i(a† − a)/√2`, so that `[X, P] = i` away from the cutoff.
pub fn p_matrix(cutoff: FockCutoff) -> Operator {
    let a = annihilation_matrix(cutoff);
    (a.adjoint() - &a).scale(std::f64::consts::FRAC_1_SQRT_2) * Complex64::new(0.0, 1.0)
}

/// Matrix of `X²` written out element by element.
///
/// Unlike squaring a truncated [`x_matrix`], this is exact up to the last
/// retained index.
pub fn x_squared_matrix(cutoff: FockCutoff) -> Operator {
    let d = cutoff.dim();
    let mut m = DMatrix::zeros(d, d);
    for k in 0..d {
        let kf = k as f64;
        m[(k, k)] = Complex64::new(kf + 0.5, 0.0);
        if k >= 2 {
            m[(k - 2, k)] = Complex64::new(0.5 * (kf * (kf - 1.0)).sqrt(), 0.0);
        }
        if k + 2 < d {
            m[(k + 2, k)] = Complex64::new(0.5 * ((kf + 1.0) * (kf + 2.0)).sqrt(), 0.0);
        }
    }
    m
}

/// `Tr[ρ O]` for a Hermitian operator.
pub fn expect(rho: &DensityMatrix, op: &Operator) -> Result<f64> {
    if op.nrows() != rho.dim() || op.ncols() != rho.dim() {
        return Err(Error::InvalidArgument(format!(
            "operator is {}x{}, state dimension {}",
            op.nrows(),
            op.ncols(),
            rho.dim()
        )));
    }
    if op.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(Error::NonFinite("operator entries"));
    }
    let scale = op.iter().map(|a| a.norm()).fold(1.0, f64::max);
    let dev = hermitian_deviation(op);
    if dev > HERMITIAN_TOL * scale {
        return Err(Error::NonHermitian(dev));
    }
    Ok(trace_product(rho.entries(), op)?)
}

pub(crate) fn trace_product(rho: &DMatrix<Complex64>, op: &Operator) -> Result<f64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..rho.nrows() {
        for j in 0..rho.ncols() {
            acc += rho[(i, j)] * op[(j, i)];
        }
    }
    let scale = rho.iter().map(|a| a.norm()).fold(0.0, f64::max).max(1e-300)
        * op.iter().map(|a| a.norm()).fold(0.0, f64::max).max(1.0);
    if !acc.re.is_finite() || !acc.im.is_finite() {
        return Err(Error::NonFinite("expectation value"));
    }
    if acc.im.abs() > 1e-9 * scale.max(1.0) {
        return Err(Error::InvalidState(format!("expectation has imaginary part {:.3e}", acc.im)));
    }
    Ok(acc.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn cutoff_rejects_small() {
        assert_eq!(FockCutoff::new(1), Err(Error::InvalidCutoff(1)));
        assert!(FockCutoff::new(2).is_ok());
    }

    #[test]
    fn constructors_reject_overflow() {
        let cut = FockCutoff::new(2).unwrap();
        assert!(matches!(PureState::fock(&[3], cut), Err(Error::CutoffOverflow { .. })));
        assert!(DensityMatrix::diagonal(&[0.25; 4], cut).is_err());
    }

    #[test]
    fn tensor_fock_states() {
        let cut = FockCutoff::DEFAULT;
        let one = PureState::fock(&[1], cut).unwrap();
        let both = one.tensor(&one).unwrap();
        assert_eq!(both.amplitude(&[1, 1]).unwrap(), c(1.0));
        assert_eq!(both.amplitudes()[cut.index(&[1, 1]).unwrap()], c(1.0));
        assert_eq!(cut.index(&[1, 1]).unwrap(), 8);

        let vac = DensityMatrix::vacuum(1, cut).unwrap();
        let vv = tensor(&vac, &vac).unwrap();
        assert!((vv.trace() - 1.0).abs() < 1e-15);
        assert_eq!(vv.get(&[0, 0], &[0, 0]).unwrap(), c(1.0));
    }

    #[test]
    fn tensor_bernoulli_weights() {
        let rho = DensityMatrix::diagonal(&[0.5, 0.5], FockCutoff::DEFAULT).unwrap();
        let two = rho.tensor(&rho).unwrap();
        for occ in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            assert!((two.get(&occ, &occ).unwrap().re - 0.25).abs() < 1e-15);
        }
        two.validate().unwrap();
    }

    #[test]
    fn tensor_cutoff_mismatch() {
        let a = DensityMatrix::vacuum(1, FockCutoff::new(2).unwrap()).unwrap();
        let b = DensityMatrix::vacuum(1, FockCutoff::new(3).unwrap()).unwrap();
        assert_eq!(a.tensor(&b), Err(Error::CutoffMismatch(2, 3)));
    }

    #[test]
    fn partial_trace_examples() {
        let cut = FockCutoff::DEFAULT;
        let r = DensityMatrix::fock(&[1, 0], cut).unwrap().partial_trace(2).unwrap();
        assert_eq!(r, DensityMatrix::fock(&[1], cut).unwrap());

        // (|20⟩ − |02⟩)/√2 reduces to an equal mixture of |0⟩ and |2⟩
        let mut amps = DVector::zeros(cut.dim_modes(2));
        amps[cut.index(&[2, 0]).unwrap()] = c(1.0);
        amps[cut.index(&[0, 2]).unwrap()] = c(-1.0);
        let psi = PureState::from_amplitudes(amps, cut, 2).unwrap().normalize().unwrap();
        let red = psi.to_density().partial_trace(2).unwrap();
        let expected = DensityMatrix::diagonal(&[0.5, 0.0, 0.5], cut).unwrap();
        assert!((red.entries() - expected.entries()).norm() < 1e-15);
    }

    #[test]
    fn partial_trace_rejects_single_mode() {
        let vac = DensityMatrix::vacuum(1, FockCutoff::DEFAULT).unwrap();
        assert!(vac.partial_trace(1).is_err());
    }

    #[test]
    fn x_squared_elements() {
        let x2 = x_squared_matrix(FockCutoff::DEFAULT);
        assert_eq!(x2[(0, 0)], c(0.5));
        assert_eq!(x2[(1, 1)], c(1.5));
        assert_eq!(x2[(2, 2)], c(2.5));
        assert!((x2[(0, 2)].re - 2f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn x_squared_matches_ladder_expansion_below_cutoff() {
        // (a + a†)²/2 from the ladder matrices at a larger cutoff, cropped
        let big = FockCutoff::new(10).unwrap();
        let x = x_matrix(big);
        let sq = &x * &x;
        let small = x_squared_matrix(FockCutoff::DEFAULT);
        for i in 0..7 {
            for j in 0..7 {
                assert!((sq[(i, j)] - small[(i, j)]).norm() < 1e-14, "({i},{j})");
            }
        }
        // pentadiagonal, real symmetric
        for i in 0..7 {
            for j in 0..7 {
                let d = (i as usize).abs_diff(j);
                if d != 0 && d != 2 {
                    assert_eq!(small[(i, j)], c(0.0));
                }
                assert_eq!(small[(i, j)], small[(j, i)]);
                assert_eq!(small[(i, j)].im, 0.0);
            }
        }
    }

    #[test]
    fn canonical_commutator_away_from_cutoff() {
        let cut = FockCutoff::DEFAULT;
        let (x, p) = (x_matrix(cut), p_matrix(cut));
        let comm = &x * &p - &p * &x;
        for n in 0..cut.n_max() {
            assert!((comm[(n, n)] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn expect_examples() {
        let cut = FockCutoff::DEFAULT;
        let x2 = x_squared_matrix(cut);
        assert!((expect(&DensityMatrix::vacuum(1, cut).unwrap(), &x2).unwrap() - 0.5).abs() < 1e-15);
        assert!((expect(&DensityMatrix::fock(&[1], cut).unwrap(), &x2).unwrap() - 1.5).abs() < 1e-15);

        let mut amps = DVector::zeros(cut.dim());
        amps[0] = c(1.0);
        amps[2] = c(1.0);
        let psi = PureState::from_amplitudes(amps, cut, 1).unwrap().normalize().unwrap();
        // direct contraction: ½(⟨0|+⟨2|) X² (|0⟩+|2⟩)
        let oracle = 0.5 * (x2[(0, 0)] + x2[(2, 2)] + x2[(0, 2)] + x2[(2, 0)]).re;
        assert!((oracle - (1.5 + 2f64.sqrt() / 2.0)).abs() < 1e-14);
        assert!((expect(&psi.to_density(), &x2).unwrap() - oracle).abs() < 1e-14);
    }

    #[test]
    fn expect_rejects_bad_operators() {
        let cut = FockCutoff::DEFAULT;
        let rho = DensityMatrix::vacuum(1, cut).unwrap();
        assert!(matches!(expect(&rho, &annihilation_matrix(cut)), Err(Error::NonHermitian(_))));
        let mut nan = x_squared_matrix(cut);
        nan[(1, 1)] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(expect(&rho, &nan), Err(Error::NonFinite(_))));
    }

    #[test]
    fn fock_expectation_is_n_plus_half() {
        let cut = FockCutoff::DEFAULT;
        let x2 = x_squared_matrix(cut);
        for n in 0..=cut.n_max() {
            let v = expect(&DensityMatrix::fock(&[n], cut).unwrap(), &x2).unwrap();
            assert_eq!(v, n as f64 + 0.5);
        }
    }

    #[test]
    fn validation_failures() {
        let cut = FockCutoff::new(2).unwrap();
        let mut m = DMatrix::zeros(3, 3);
        m[(0, 0)] = c(1.5);
        m[(1, 1)] = c(-0.5);
        assert!(DensityMatrix::from_entries(m.clone(), cut, 1).is_err());
        m[(1, 1)] = c(0.0);
        m[(0, 0)] = c(1.0);
        m[(0, 1)] = c(0.3);
        assert!(DensityMatrix::from_entries(m, cut, 1).is_err());
    }

    fn random_density(cut: FockCutoff, modes: usize, seed: &[f64]) -> DensityMatrix {
        // ρ = A A† / Tr with A filled deterministically from the seed values
        let d = cut.dim_modes(modes);
        let a = DMatrix::from_fn(d, d, |i, j| {
            let k = (i * d + j) % seed.len();
            Complex64::new(seed[k] * ((i + 1) as f64).sin(), seed[(k + 1) % seed.len()] * ((j + 2) as f64).cos())
        });
        DensityMatrix::from_raw(&a * a.adjoint(), cut, modes).normalize().unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn partial_trace_preserves_trace(seed in prop::collection::vec(-1.0f64..1.0, 5..12)) {
            let cut = FockCutoff::new(3).unwrap();
            let rho = random_density(cut, 2, &seed);
            prop_assume!(rho.trace().is_finite());
            rho.validate().unwrap();
            for mode in [1, 2] {
                let red = rho.partial_trace(mode).unwrap();
                prop_assert!((red.trace() - 1.0).abs() < 1e-12);
                prop_assert!(hermitian_deviation(red.entries()) < 1e-12);
                let again = red.normalize().unwrap();
                prop_assert!((again.trace() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn product_then_trace_returns_factor(seed in prop::collection::vec(-1.0f64..1.0, 4..9)) {
            let cut = FockCutoff::new(3).unwrap();
            let a = random_density(cut, 1, &seed);
            let rev: Vec<f64> = seed.iter().rev().map(|v| v * 0.7 + 0.1).collect();
            let b = random_density(cut, 1, &rev);
            let ab = a.tensor(&b).unwrap();
            prop_assert!((ab.partial_trace(2).unwrap().entries() - a.entries()).camax() < 1e-12);
            prop_assert!((ab.partial_trace(1).unwrap().entries() - b.entries()).camax() < 1e-12);
        }

        #[test]
        fn normalize_is_idempotent(scale in 0.1f64..10.0, seed in prop::collection::vec(-1.0f64..1.0, 3..7)) {
            let cut = FockCutoff::new(3).unwrap();
            let rho = random_density(cut, 1, &seed);
            let scaled = DensityMatrix::from_raw(rho.entries().scale(scale), cut, 1);
            let once = scaled.normalize().unwrap();
            let twice = once.normalize().unwrap();
            prop_assert!((once.trace() - 1.0).abs() < 1e-12);
            prop_assert!((once.entries() - twice.entries()).camax() < 1e-15);
        }
    }
}
