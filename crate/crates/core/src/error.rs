use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("cutoff mismatch: {0} vs {1}")]
    CutoffMismatch(usize, usize),

    #[error("photon number {needed} exceeds cutoff n_max = {n_max}")]
    CutoffOverflow { needed: usize, n_max: usize },

    #[error("invalid cutoff {0}: n_max must be at least 2")]
    InvalidCutoff(usize),

    #[error("mode mismatch: expected {expected} mode(s), got {got}")]
    ModeMismatch { expected: usize, got: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("operator is not Hermitian (deviation {0:.3e})")]
    NonHermitian(f64),

    #[error("non-finite value encountered: {0}")]
    NonFinite(&'static str),

    #[error("invalid photon-number distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("conditioning on a null event (marginal density {0:.3e})")]
    NullCondition(f64),

    #[error("conditioning window is empty")]
    EmptyWindow,

    #[error("no samples supplied")]
    NoSamples,

    #[error("gridded density does not normalize (leakage {0:.3e})")]
    Leakage(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
