//! Signal-type decision from scan-trace envelope features: whether the
//! pulses are filled with random power, how many there are, and whether a
//! filled region is continuous or broken into sub-envelopes.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::photonic::LinkModels;
use crate::scan::{PulseDetector, PulseEvent, SawtoothDrive, ScanTrace};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeFeatures {
    /// Largest number of events found in a single scan period.
    pub n_envelopes: usize,
    pub filled: bool,
    /// Only meaningful when `filled`.
    pub continuous: bool,
    pub max_fill_randomness: f64,
    /// Longest internal gap found in a filled region, in seconds.
    pub longest_gap_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassLabel {
    SingleFrequency,
    MultipleFrequency,
    Chirped,
    FrequencyHopping,
    Unknown,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 5] = [
        ClassLabel::SingleFrequency,
        ClassLabel::MultipleFrequency,
        ClassLabel::Chirped,
        ClassLabel::FrequencyHopping,
        ClassLabel::Unknown,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassLabel::SingleFrequency => "single",
            ClassLabel::MultipleFrequency => "multiple",
            ClassLabel::Chirped => "chirped",
            ClassLabel::FrequencyHopping => "hopping",
            ClassLabel::Unknown => "unknown",
        }
    }

    /// Whether the instantaneous path can track this signal type. It needs a
    /// single component at a time, so simultaneous tones are excluded.
    pub fn supports_instantaneous(&self) -> bool {
        matches!(
            self,
            ClassLabel::SingleFrequency | ClassLabel::Chirped | ClassLabel::FrequencyHopping
        )
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClassLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown class label `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureThresholds {
    pub fill_threshold: f64,
    /// Internal envelope gaps longer than this make a filled region discrete.
    pub gap_threshold_s: f64,
}

impl FeatureThresholds {
    /// Fill threshold 0.25 and a gap threshold of half the static pulse
    /// width at mid band.
    pub fn for_scan(models: &LinkModels, drive: &SawtoothDrive) -> Self {
        FeatureThresholds {
            fill_threshold: 0.25,
            gap_threshold_s: 0.5 * drive.pulse_width(&models.mrr, 15e9),
        }
    }
}

/// Extracts classification features from the events of `trace`.
///
/// Continuity is judged on the running-max envelope: within each period's
/// filled region, a gap is a stretch below the region's half level
/// (`floor + 0.5 (peak - floor)`) that has signal on both sides.
pub fn compute_features(
    events: &[PulseEvent],
    trace: &ScanTrace,
    detector: &PulseDetector,
    thresholds: &FeatureThresholds,
) -> EnvelopeFeatures {
    let mut per_period = std::collections::BTreeMap::<usize, Vec<&PulseEvent>>::new();
    for e in events {
        per_period.entry(e.period_index).or_default().push(e);
    }
    let n_envelopes = per_period.values().map(Vec::len).max().unwrap_or(0);
    let max_fill = events.iter().map(|e| e.fill_randomness).fold(0.0, f64::max);
    let filled = !events.is_empty() && max_fill >= thresholds.fill_threshold;

    let mut longest_gap = 0usize;
    if filled {
        let floor = detector.noise_floor(trace);
        let env = detector.envelope(trace, floor);
        for group in per_period.values() {
            let filled_events: Vec<&&PulseEvent> = group
                .iter()
                .filter(|e| e.fill_randomness >= thresholds.fill_threshold)
                .collect();
            let (Some(first), Some(last)) = (filled_events.first(), filled_events.last()) else {
                continue;
            };
            let region = &env[first.start_index..=last.end_index];
            let peak = region.iter().copied().fold(f64::MIN, f64::max);
            let level = floor + 0.5 * (peak - floor);
            longest_gap = longest_gap.max(longest_internal_gap(region, level));
        }
    }
    let longest_gap_s = longest_gap as f64 * trace.grid.dt();

    EnvelopeFeatures {
        n_envelopes,
        filled,
        continuous: filled && longest_gap_s <= thresholds.gap_threshold_s,
        max_fill_randomness: max_fill,
        longest_gap_s,
    }
}

/// Longest run below `level` bounded by samples at or above it on both sides.
fn longest_internal_gap(env: &[f64], level: f64) -> usize {
    let mut longest = 0;
    let mut seen_signal = false;
    let mut run = 0;
    for &v in env {
        if v >= level {
            if seen_signal {
                longest = longest.max(run);
            }
            seen_signal = true;
            run = 0;
        } else {
            run += 1;
        }
    }
    longest
}

pub fn classify(features: &EnvelopeFeatures) -> ClassLabel {
    match (features.n_envelopes, features.filled, features.continuous) {
        (0, _, _) => ClassLabel::Unknown,
        (1, false, _) => ClassLabel::SingleFrequency,
        (_, false, _) => ClassLabel::MultipleFrequency,
        (_, true, true) => ClassLabel::Chirped,
        (_, true, false) => ClassLabel::FrequencyHopping,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn features(n: usize, filled: bool, continuous: bool) -> EnvelopeFeatures {
        EnvelopeFeatures {
            n_envelopes: n,
            filled,
            continuous,
            max_fill_randomness: 0.0,
            longest_gap_s: 0.0,
        }
    }

    #[test]
    fn decision_table() {
        assert_eq!(classify(&features(1, false, false)), ClassLabel::SingleFrequency);
        assert_eq!(classify(&features(2, false, false)), ClassLabel::MultipleFrequency);
        assert_eq!(classify(&features(1, true, true)), ClassLabel::Chirped);
        assert_eq!(classify(&features(1, true, false)), ClassLabel::FrequencyHopping);
        assert_eq!(classify(&features(3, true, false)), ClassLabel::FrequencyHopping);
        assert_eq!(classify(&features(0, true, true)), ClassLabel::Unknown);
    }

    #[test]
    fn labels_round_trip() {
        for l in ClassLabel::ALL {
            assert_eq!(l.as_str().parse::<ClassLabel>().unwrap(), l);
        }
        assert!("tone".parse::<ClassLabel>().is_err());
        assert!(!ClassLabel::MultipleFrequency.supports_instantaneous());
    }

    #[test]
    fn internal_gaps_need_signal_on_both_sides() {
        let env = [0.0, 0.0, 1.0, 1.0, 0.1, 0.1, 0.1, 1.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(longest_internal_gap(&env, 0.5), 3);
        assert_eq!(longest_internal_gap(&[0.0, 1.0, 0.0], 0.5), 0);
    }

    proptest! {
        #[test]
        fn classify_is_total(n in 0usize..10, filled: bool, continuous: bool) {
            let label = classify(&features(n, filled, continuous));
            prop_assert!(ClassLabel::ALL.contains(&label));
        }
    }
}
