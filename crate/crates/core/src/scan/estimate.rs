use crate::error::{Error, Result};
use crate::util::quantile;

use super::pulses::live_samples;
use super::{detect_pulses, CalibrationTable, PulseDetector, PulseEvent, ScanTrace};

/// Frequency estimate for one pulse event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimate {
    InBand {
        peak_time: f64,
        freq_hz: f64,
    },
    /// The event delay lies outside the calibrated range; no value is
    /// extrapolated.
    OutOfBand {
        peak_time: f64,
    },
}

impl Estimate {
    pub fn freq_hz(&self) -> Option<f64> {
        match *self {
            Estimate::InBand { freq_hz, .. } => Some(freq_hz),
            Estimate::OutOfBand { .. } => None,
        }
    }

    pub fn peak_time(&self) -> f64 {
        match *self {
            Estimate::InBand { peak_time, .. } | Estimate::OutOfBand { peak_time } => peak_time,
        }
    }
}

/// Maps each event's peak delay through the lookup table.
pub fn estimate_frequencies(events: &[PulseEvent], table: &CalibrationTable) -> Vec<Estimate> {
    events
        .iter()
        .map(|e| {
            if table.contains(e.peak_time) {
                Estimate::InBand {
                    peak_time: e.peak_time,
                    freq_hz: table.eval(e.peak_time),
                }
            } else {
                Estimate::OutOfBand { peak_time: e.peak_time }
            }
        })
        .collect()
}

/// Settings for [`measure_span`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpanRule {
    pub noise_floor_quantile: f64,
    /// Threshold above the floor as a fraction of `max - floor`.
    pub threshold_fraction: f64,
    /// Width of the central window used to measure the interior fill
    /// density, as a fraction of the above-threshold frequency extent.
    pub center_fraction: f64,
}

impl Default for SpanRule {
    fn default() -> Self {
        SpanRule {
            noise_floor_quantile: 0.5,
            threshold_fraction: 0.1,
            center_fraction: 0.1,
        }
    }
}

/// Frequency span of a filled envelope.
///
/// A sample counts as occupied when it exceeds the 10 % threshold. The
/// occupied samples are integrated in frequency through the table slope
/// and divided by the occupancy of the envelope interior, which yields the
/// band the envelope covers independently of how densely the randomly
/// sampled emitter fills it. For a static tone the interior occupancy is 1
/// and the result is the table-mapped width of the pulse at the threshold.
pub fn measure_span(trace: &ScanTrace, table: &CalibrationTable, rule: &SpanRule) -> Result<f64> {
    let live: Vec<usize> = live_samples(trace).collect();
    if live.is_empty() {
        return Err(Error::NoEnvelope);
    }
    let powers: Vec<f64> = live.iter().map(|&k| trace.power[k]).collect();
    let floor = quantile(&powers, rule.noise_floor_quantile);
    let max = powers.iter().copied().fold(f64::MIN, f64::max);
    if !(max > floor) {
        return Err(Error::NoEnvelope);
    }
    let threshold = floor + rule.threshold_fraction * (max - floor);

    let occupied: Vec<f64> = live
        .iter()
        .filter(|&&k| trace.power[k] > threshold)
        .map(|&k| trace.phase_time(k))
        .collect();
    if occupied.is_empty() {
        return Err(Error::NoEnvelope);
    }
    let t_first = occupied.iter().copied().fold(f64::INFINITY, f64::min);
    let t_last = occupied.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let dt = trace.grid.dt();
    let periods = trace.periods_covered().max(1.0);
    let area: f64 = occupied.iter().map(|&t| table.slope(t) * dt).sum::<f64>() / periods;

    let (f_first, f_last) = (table.eval(t_first), table.eval(t_last));
    let mid = 0.5 * (f_first + f_last);
    let half = 0.5 * rule.center_fraction * (f_last - f_first);
    let (mut inside, mut hit) = (0usize, 0usize);
    for &k in &live {
        if (table.eval(trace.phase_time(k)) - mid).abs() <= half {
            inside += 1;
            if trace.power[k] > threshold {
                hit += 1;
            }
        }
    }
    if hit == 0 {
        return Ok(f_last - f_first);
    }
    Ok(area * inside as f64 / hit as f64)
}

/// Distinct frequencies of the sub-envelopes in a filled trace, sorted
/// ascending.
///
/// Each sub-envelope is measured at the center of its half-peak envelope
/// region. Estimates from different scan periods closer than the detector
/// resolution are averaged into one value.
pub fn estimate_hop_set(trace: &ScanTrace, table: &CalibrationTable, detector: &PulseDetector) -> Result<Vec<f64>> {
    let mut freqs: Vec<f64> = detect_pulses(trace, detector)
        .iter()
        .filter(|e| table.contains(e.envelope_center))
        .map(|e| table.eval(e.envelope_center))
        .collect();
    if freqs.is_empty() {
        return Err(Error::NoSubEnvelopes);
    }
    freqs.sort_by(f64::total_cmp);
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for f in freqs {
        match clusters.last_mut() {
            Some(c) if f - c[c.len() - 1] < detector.resolution_hz => c.push(f),
            _ => clusters.push(vec![f]),
        }
    }
    Ok(clusters
        .iter()
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_table() -> CalibrationTable {
        CalibrationTable {
            a: 0.0,
            b: 1e9,
            c: 0.0,
            t_min: 10.0,
            t_max: 20.0,
            fit_residual_rms: 0.0,
        }
    }

    fn event(t: f64) -> PulseEvent {
        PulseEvent {
            peak_time: t,
            peak_power: 1.0,
            width: 1.0,
            fill_randomness: 0.0,
            envelope_center: t,
            period_index: 0,
            start_index: 0,
            end_index: 0,
        }
    }

    #[test]
    fn out_of_range_events_are_flagged() {
        let est = estimate_frequencies(&[event(15.0), event(25.0)], &line_table());
        assert_eq!(est[0].freq_hz(), Some(15e9));
        assert_eq!(est[1], Estimate::OutOfBand { peak_time: 25.0 });
        assert_eq!(est[1].freq_hz(), None);
    }
}
