//! Quantitative outputs: coincidence statistics and visibility, the
//! conditional second-moment witness (exact and from data), confidence bands
//! and the post-selection window sweep.

mod band;
mod coincidence;
mod sweep;
mod witness;

pub use band::{bootstrap_band, confidence_band, derive_seed, BandConfig, BandMethod};
pub use coincidence::{apd_probabilities, visibility, CoincidenceTable};
pub use sweep::{optimize_window, SkipReason, SkippedWindow, SweepResult, SweepRow};
pub use witness::{
    estimate_windowed_moment, exact_conditional_second_moment, exact_window_stats, exact_windowed_moment,
    minimizing_angle, witness_report, ConditionWindow, WindowEstimate, WindowKernel, WindowStats, WitnessReport,
    VACUUM_VARIANCE,
};
