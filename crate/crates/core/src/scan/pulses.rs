use crate::photonic::LinkModels;
use crate::util::{quantile, running_max};

use super::{SawtoothDrive, ScanTrace};

/// Offset used to size the default detector windows (middle of the
/// 10-20 GHz measurement band).
const REFERENCE_OFFSET_HZ: f64 = 15e9;

/// One pulse (static tone) or sub-envelope (chirp/hop) in a scan trace.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseEvent {
    /// Delay of the raw-sample maximum from the start of its sawtooth period.
    pub peak_time: f64,
    pub peak_power: f64,
    /// Duration the envelope stays above half its peak.
    pub width: f64,
    /// Fraction of samples in the event lying below half the local envelope.
    pub fill_randomness: f64,
    /// Midpoint of the half-peak envelope region, relative to period start.
    pub envelope_center: f64,
    /// Sawtooth period the event belongs to.
    pub period_index: usize,
    /// First and last trace sample of the event (inclusive).
    pub start_index: usize,
    pub end_index: usize,
}

/// Pulse detection settings.
///
/// The trace is first turned into an upper envelope (running maximum over
/// `envelope_window_s`), so pulses that are sparsely sampled still form one
/// connected region. Regions above `floor + min_prominence * (max - floor)`
/// are grouped, and groups are split at valleys deeper than the same
/// fraction of full scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseDetector {
    pub noise_floor_quantile: f64,
    pub min_prominence: f64,
    /// Above-threshold runs closer than this are merged into one group.
    pub merge_gap_s: f64,
    pub envelope_window_s: f64,
    /// Events from different periods closer than this in frequency are the
    /// same spectral feature.
    pub resolution_hz: f64,
}

impl PulseDetector {
    /// Defaults sized from the static crossing-pulse width at mid band.
    pub fn for_scan(models: &LinkModels, drive: &SawtoothDrive) -> Self {
        let width = drive.pulse_width(&models.mrr, REFERENCE_OFFSET_HZ);
        PulseDetector {
            noise_floor_quantile: 0.5,
            min_prominence: 0.1,
            merge_gap_s: width,
            envelope_window_s: width / 8.0,
            resolution_hz: models.mrr.fwhm_hz,
        }
    }

    pub(crate) fn envelope_half_window(&self, trace: &ScanTrace) -> usize {
        (0.5 * self.envelope_window_s * trace.grid.sample_rate).round() as usize
    }

    /// Noise floor over the unblanked samples.
    pub fn noise_floor(&self, trace: &ScanTrace) -> f64 {
        let live: Vec<f64> = live_samples(trace).map(|k| trace.power[k]).collect();
        if live.is_empty() {
            0.0
        } else {
            quantile(&live, self.noise_floor_quantile)
        }
    }

    /// Upper envelope with blanked samples pinned to the noise floor.
    pub fn envelope(&self, trace: &ScanTrace, floor: f64) -> Vec<f64> {
        let masked: Vec<f64> = trace
            .power
            .iter()
            .enumerate()
            .map(|(k, &p)| if trace.is_blanked(k) { floor } else { p })
            .collect();
        running_max(&masked, self.envelope_half_window(trace))
    }
}

pub(crate) fn live_samples(trace: &ScanTrace) -> impl Iterator<Item = usize> + '_ {
    (0..trace.power.len()).filter(move |&k| !trace.is_blanked(k))
}

/// Finds pulses in a scan trace. A flat trace yields no events.
pub fn detect_pulses(trace: &ScanTrace, detector: &PulseDetector) -> Vec<PulseEvent> {
    let n = trace.power.len();
    if n == 0 {
        return Vec::new();
    }
    let floor = detector.noise_floor(trace);
    let env = detector.envelope(trace, floor);
    let peak = env.iter().copied().fold(f64::MIN, f64::max);
    let full = peak - floor;
    if !(full > 1e-12 * peak.abs().max(f64::MIN_POSITIVE)) || full <= 0.0 {
        return Vec::new();
    }
    let threshold = floor + detector.min_prominence * full;
    let split_depth = detector.min_prominence * full;
    let merge_gap = (detector.merge_gap_s * trace.grid.sample_rate).round() as usize;

    let mut events = Vec::new();
    for (start, end) in above_runs(&env, threshold, merge_gap, trace) {
        let mut seg_start = start;
        for valley in split_valleys(&env[start..=end], split_depth) {
            let v = start + valley;
            events.push(build_event(trace, &env, seg_start, v - 1));
            seg_start = v;
        }
        events.push(build_event(trace, &env, seg_start, end));
    }
    events
}

/// Contiguous runs of `env > threshold`, merged across short gaps. Runs
/// never span a sawtooth reset.
fn above_runs(env: &[f64], threshold: f64, merge_gap: usize, trace: &ScanTrace) -> Vec<(usize, usize)> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut k = 0;
    while k < env.len() {
        if env[k] > threshold {
            let s = k;
            while k + 1 < env.len() && env[k + 1] > threshold {
                k += 1;
            }
            let same_period = |a: usize, b: usize| period_of(trace, a) == period_of(trace, b);
            match runs.last_mut() {
                Some(last) if s - last.1 <= merge_gap + 1 && same_period(last.1, s) => last.1 = k,
                _ => runs.push((s, k)),
            }
        }
        k += 1;
    }
    runs
}

fn period_of(trace: &ScanTrace, k: usize) -> usize {
    (trace.grid.time(k) / trace.drive.period_s).floor() as usize
}

/// Hysteresis peak search: a peak is confirmed once the signal falls
/// `depth` below it, a valley once it rises `depth` above it. Returns the
/// valley positions separating consecutive peaks.
fn split_valleys(seg: &[f64], depth: f64) -> Vec<usize> {
    let mut valleys = Vec::new();
    let mut max = f64::MIN;
    let mut min = f64::MAX;
    let mut min_idx = 0;
    let mut looking_for_max = true;
    for (i, &v) in seg.iter().enumerate() {
        if v > max {
            max = v;
        }
        if v < min {
            min = v;
            min_idx = i;
        }
        if looking_for_max {
            if v < max - depth {
                looking_for_max = false;
                min = v;
                min_idx = i;
            }
        } else if v > min + depth {
            valleys.push(min_idx);
            looking_for_max = true;
            max = v;
        }
    }
    valleys.retain(|&v| v > 0);
    valleys
}

fn build_event(trace: &ScanTrace, env: &[f64], start: usize, end: usize) -> PulseEvent {
    let power = &trace.power[start..=end];
    let mut best = 0;
    for (i, &p) in power.iter().enumerate() {
        // strict comparison keeps the earliest of tied maxima
        if p > power[best] {
            best = i;
        }
    }
    let k_peak = start + best;

    let seg_env = &env[start..=end];
    let mut env_best = 0;
    for (i, &e) in seg_env.iter().enumerate() {
        if e > seg_env[env_best] {
            env_best = i;
        }
    }
    let half = 0.5 * seg_env[env_best];
    let mut lo = env_best;
    while lo > 0 && seg_env[lo - 1] >= half {
        lo -= 1;
    }
    let mut hi = env_best;
    while hi + 1 < seg_env.len() && seg_env[hi + 1] >= half {
        hi += 1;
    }
    let dt = trace.grid.dt();
    let center_index = start as f64 + 0.5 * (lo + hi) as f64;
    let center_time = (trace.grid.t0 + center_index * dt).rem_euclid(trace.drive.period_s);

    let below = power.iter().zip(seg_env).filter(|(&p, &e)| p < 0.5 * e).count();

    PulseEvent {
        peak_time: trace.phase_time(k_peak),
        peak_power: trace.power[k_peak],
        width: ((hi - lo + 1) as f64 * dt).max(dt),
        fill_randomness: below as f64 / power.len() as f64,
        envelope_center: center_time,
        period_index: period_of(trace, k_peak),
        start_index: start,
        end_index: end,
    }
}
