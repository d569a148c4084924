use std::sync::OnceLock;

use proptest::prelude::*;

use mwfi_core::photonic::LinkModels;
use mwfi_core::rf_signals::{RfScenario, TimeGrid};
use mwfi_core::scan::{
    calibrate, default_calibration_tones, detect_pulses, estimate_frequencies, estimate_hop_set, measure_span,
    simulate_scan, CalibrationTable, PulseDetector, SawtoothDrive, SpanRule, DEFAULT_SCAN_RATE,
};

fn drive() -> SawtoothDrive {
    SawtoothDrive::default()
}

fn grid() -> TimeGrid {
    drive().grid(DEFAULT_SCAN_RATE).unwrap()
}

fn noiseless() -> LinkModels {
    LinkModels::default().noiseless()
}

fn table() -> &'static CalibrationTable {
    static TABLE: OnceLock<CalibrationTable> = OnceLock::new();
    TABLE.get_or_init(|| calibrate(&noiseless(), &drive(), &default_calibration_tones(), &grid()).unwrap())
}

/// Independent lag-free sweep rate: `f = 8 GHz + 2 GHz/V² (16 V/s t)²`.
fn oracle_slope(f: f64) -> f64 {
    2.0 * 2e9 * ((f - 8e9) / 2e9).sqrt() * 16.0
}

fn estimates(scenario: &RfScenario, models: &LinkModels) -> Vec<f64> {
    let trace = simulate_scan(scenario, models, &drive(), &grid()).unwrap();
    let det = PulseDetector::for_scan(models, &drive());
    estimate_frequencies(&detect_pulses(&trace, &det), table())
        .iter()
        .filter_map(|e| e.freq_hz())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn noiseless_round_trip_within_two_samples(f in 10e9..20e9f64) {
        let est = estimates(&RfScenario::tone(f), &noiseless());
        prop_assert_eq!(est.len(), 1);
        // one sample of quantization plus the fit residual
        let bound = 2.0 * oracle_slope(f) / DEFAULT_SCAN_RATE;
        prop_assert!((est[0] - f).abs() <= bound, "{} vs {} (bound {})", est[0], f, bound);
    }

    #[test]
    fn separated_tones_add_pulses(a in 10e9..14e9f64, gap in 2e9..6e9f64) {
        let models = noiseless();
        let det = PulseDetector::for_scan(&models, &drive());
        let count = |s: &RfScenario| detect_pulses(&simulate_scan(s, &models, &drive(), &grid()).unwrap(), &det).len();
        let single_a = count(&RfScenario::tone(a));
        let single_b = count(&RfScenario::tone(a + gap));
        prop_assert_eq!(count(&RfScenario::tones(&[a, a + gap])), single_a + single_b);
    }
}

#[test]
fn pulse_count_scales_with_periods() {
    let models = noiseless();
    let three = SawtoothDrive {
        n_periods: 3,
        ..drive()
    };
    let g = three.grid(DEFAULT_SCAN_RATE).unwrap();
    let trace = simulate_scan(&RfScenario::tones(&[11e9, 17e9]), &models, &three, &g).unwrap();
    let events = detect_pulses(&trace, &PulseDetector::for_scan(&models, &three));
    assert_eq!(events.len(), 6);
    for p in 0..3 {
        assert_eq!(events.iter().filter(|e| e.period_index == p).count(), 2);
    }
    // the per-period delays repeat to within a sample
    for pair in events.chunks(2).skip(1) {
        for (e, f) in pair.iter().zip(&events[..2]) {
            assert!((e.peak_time - f.peak_time).abs() <= 1.5 / DEFAULT_SCAN_RATE);
        }
    }
}

#[test]
fn static_pulses_are_filled_dynamic_ones_are_not() {
    use mwfi_core::rf_signals::{ChirpSpec, HopSpec};
    let models = LinkModels::default().with_noise(0.01, 4);
    let det = PulseDetector::for_scan(&models, &drive());
    let fill = |s: RfScenario| {
        let trace = simulate_scan(&s, &models, &drive(), &grid()).unwrap();
        detect_pulses(&trace, &det)
            .iter()
            .map(|e| e.fill_randomness)
            .fold(0.0, f64::max)
    };
    assert!(fill(RfScenario::tones(&[12e9, 17e9])) < 0.1);
    assert!(fill(RfScenario::new().with_chirp(ChirpSpec::new(15e9, 4e9, 1.6e-6, 4e-6))) > 0.5);
    assert!(fill(RfScenario::new().with_hop(HopSpec::new(vec![10e9, 13e9, 18e9], 80e-9))) > 0.5);
}

#[test]
fn calibration_is_deterministic_and_tight() {
    let again = calibrate(&noiseless(), &drive(), &default_calibration_tones(), &grid()).unwrap();
    assert_eq!(&again, table());
    assert!(table().is_monotone());
    // residual below the frequency step of one sample at the band top
    assert!(table().fit_residual_rms <= oracle_slope(20e9) / DEFAULT_SCAN_RATE);
    let text = table().to_text();
    assert_eq!(&CalibrationTable::from_text(&text).unwrap(), table());
}

#[test]
fn two_tone_scenarios_yield_two_estimates() {
    for pair in [[10e9, 15e9], [11e9, 16e9], [12e9, 17e9], [10e9, 11e9]] {
        let est = estimates(&RfScenario::tones(&pair), &LinkModels::default().with_noise(0.01, 1));
        assert_eq!(est.len(), 2, "{pair:?}");
        for (e, t) in est.iter().zip(&pair) {
            assert!((e - t).abs() < 510e6, "{e} vs {t}");
        }
    }
}

#[test]
fn close_tones_merge_into_one_envelope() {
    assert_eq!(estimates(&RfScenario::tones(&[10e9, 10.4e9]), &noiseless()).len(), 1);
}

#[test]
fn static_span_is_threshold_width_of_lorentzian() {
    // A Lorentzian of half-width hw crosses the 10 % level at
    // hw * sqrt(1/0.1 - 1) from its center.
    let models = noiseless();
    let f = 15e9;
    let trace = simulate_scan(&RfScenario::tone(f), &models, &drive(), &grid()).unwrap();
    let span = measure_span(&trace, table(), &SpanRule::default()).unwrap();
    let expect = models.mrr.fwhm_hz * (1.0f64 / 0.1 - 1.0).sqrt();
    assert!((span / expect - 1.0).abs() < 0.05, "{span} vs {expect}");
}

#[test]
fn single_tone_hop_set_is_the_tone() {
    let models = noiseless();
    let trace = simulate_scan(&RfScenario::tone(14e9), &models, &drive(), &grid()).unwrap();
    let set = estimate_hop_set(&trace, table(), &PulseDetector::for_scan(&models, &drive())).unwrap();
    assert_eq!(set.len(), 1);
    assert!((set[0] - 14e9).abs() < 50e6);
}

#[test]
fn empty_scenario_has_no_estimates() {
    assert!(estimates(&RfScenario::new(), &noiseless()).is_empty());
    let trace = simulate_scan(&RfScenario::new(), &noiseless(), &drive(), &grid()).unwrap();
    assert!(measure_span(&trace, table(), &SpanRule::default()).is_err());
}
