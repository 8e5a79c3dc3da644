use hom_witness::analysis::{
    estimate_windowed_moment, exact_window_stats, optimize_window, witness_report, BandConfig, BandMethod, ConditionWindow,
};
use hom_witness::fock::FockCutoff;
use hom_witness::homodyne::{HomodyneSetting, QuadratureSampler};
use hom_witness::optics::{interfere, SourceModel};

fn ideal_sampler(phase: f64) -> (hom_witness::fock::DensityMatrix, QuadratureSampler) {
    let source = SourceModel::ideal(phase);
    let state = interfere(&source, FockCutoff::DEFAULT).unwrap().measured;
    let sampler = QuadratureSampler::new(&state, &HomodyneSetting::at_angle(source.squeezing_angle())).unwrap();
    (state, sampler)
}

#[test]
fn sampled_windows_track_exact_values() {
    let (state, sampler) = ideal_sampler(0.8);
    let samples = sampler.sample(40_000, 11).unwrap();
    for (lo, hi) in [(0.0, 0.5), (1.2, 2.0), (1.9, 2.5)] {
        let w = ConditionWindow::from_abs_bounds(lo, hi).unwrap();
        let exact = exact_window_stats(&state, -0.4, w).unwrap();
        let est = estimate_windowed_moment(&samples, w).unwrap();
        let n = est.n_in_window as f64;
        let sd_n = (40_000.0 * exact.probability * (1.0 - exact.probability)).sqrt();
        assert!((n - 40_000.0 * exact.probability).abs() < 5.0 * sd_n, "window ({lo}, {hi}) count {n}");
        // Gaussian-shaped error bar, widened for the heavier tails of x1²
        let sd = 1.5 * exact.second_moment * (2.0 / n).sqrt();
        assert!((est.estimate - exact.second_moment).abs() < 5.0 * sd, "window ({lo}, {hi}): {} vs {}", est.estimate, exact.second_moment);
    }
}

#[test]
fn both_band_methods_bracket_the_estimate() {
    let (_, sampler) = ideal_sampler(0.0);
    let samples = sampler.sample(12_000, 5).unwrap();
    let w = ConditionWindow::from_abs_bounds(1.9, 2.5).unwrap();
    let gauss = witness_report(&samples, w, &BandConfig::default(), 1).unwrap();
    let boot = witness_report(&samples, w, &BandConfig { method: BandMethod::Bootstrap, ..BandConfig::default() }, 1).unwrap();
    for r in [gauss, boot] {
        assert!(r.band_lo <= r.estimate && r.estimate <= r.band_hi);
        assert_eq!(r.violated, r.band_hi < 0.5);
    }
    assert_eq!(gauss.estimate, boot.estimate);
    let (wg, wb) = (gauss.band_hi - gauss.band_lo, boot.band_hi - boot.band_lo);
    assert!((wb / wg - 1.0).abs() < 0.35, "bootstrap {wb} vs gaussian {wg}");
    assert!(gauss.violated, "ideal photons violate the bound at 12k samples: {gauss:?}");
}

#[test]
fn sweep_rows_agree_with_direct_windows() {
    let (_, sampler) = ideal_sampler(0.0);
    let samples = sampler.sample(12_000, 8).unwrap();
    let res = optimize_window(&samples, &[0.4, 0.6], &[1.5, 1.8, 2.1], &BandConfig::default(), 3).unwrap();
    for row in &res.rows {
        let w = ConditionWindow::new(row.best_center, row.delta, true).unwrap();
        let direct = estimate_windowed_moment(&samples, w).unwrap();
        assert_eq!(direct.n_in_window, row.n_in_window);
        assert!((direct.estimate - row.e_min).abs() < 1e-12);
    }
}
