//! Microwave emitter scenarios in quasi-static spectral form.
//!
//! An [`RfScenario`] never produces a sampled RF carrier. It answers one
//! question: which `(frequency, amplitude)` components are present at time
//! `t`. Every downstream model depends only on the detuning between those
//! components and a filter, so phase is only used to merge coincident tones.

use crate::error::{Error, Result};

/// Uniform sampling grid, `t_k = t0 + k / sample_rate`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub sample_rate: f64,
    pub n_samples: usize,
    pub t0: f64,
}

impl TimeGrid {
    pub fn new(sample_rate: f64, n_samples: usize, t0: f64) -> Result<Self> {
        let grid = TimeGrid {
            sample_rate,
            n_samples,
            t0,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid starting at zero that covers `duration` seconds.
    pub fn covering(sample_rate: f64, duration: f64) -> Result<Self> {
        if !(duration > 0.0) {
            return Err(Error::invalid("duration", "must be positive"));
        }
        let n = (duration * sample_rate).round() as usize;
        TimeGrid::new(sample_rate, n.max(1), 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return Err(Error::invalid("sample_rate", "must be positive and finite"));
        }
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples", "must be at least 1"));
        }
        if !self.t0.is_finite() {
            return Err(Error::invalid("t0", "must be finite"));
        }
        Ok(())
    }

    #[inline]
    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 / self.sample_rate
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_samples).map(move |k| self.time(k))
    }

    pub fn duration(&self) -> f64 {
        self.n_samples as f64 / self.sample_rate
    }

    /// Nyquist frequency of the grid.
    pub fn nyquist(&self) -> f64 {
        0.5 * self.sample_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneSpec {
    pub freq_hz: f64,
    pub amplitude: f64,
    pub phase_rad: f64,
}

impl ToneSpec {
    pub fn new(freq_hz: f64, amplitude: f64) -> Self {
        ToneSpec {
            freq_hz,
            amplitude,
            phase_rad: 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.freq_hz > 0.0) {
            return Err(Error::invalid("tone.freq_hz", "must be positive"));
        }
        if !(self.amplitude >= 0.0) {
            return Err(Error::invalid("tone.amplitude", "must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChirpDirection {
    #[default]
    Up,
    Down,
}

/// Repeating linear FM pulse. Each pulse starts at a multiple of
/// `repeat_interval_s` and lasts `pulse_width_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChirpSpec {
    pub center_hz: f64,
    pub span_hz: f64,
    pub pulse_width_s: f64,
    pub repeat_interval_s: f64,
    pub amplitude: f64,
    pub direction: ChirpDirection,
}

impl ChirpSpec {
    pub fn new(center_hz: f64, span_hz: f64, pulse_width_s: f64, repeat_interval_s: f64) -> Self {
        ChirpSpec {
            center_hz,
            span_hz,
            pulse_width_s,
            repeat_interval_s,
            amplitude: 1.0,
            direction: ChirpDirection::Up,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.span_hz > 0.0) {
            return Err(Error::invalid("chirp.span_hz", "must be positive"));
        }
        if !(self.center_hz - 0.5 * self.span_hz > 0.0) {
            return Err(Error::invalid("chirp.center_hz", "lower edge must be positive"));
        }
        if !(self.pulse_width_s > 0.0 && self.pulse_width_s <= self.repeat_interval_s) {
            return Err(Error::invalid(
                "chirp.pulse_width_s",
                "must satisfy 0 < pulse_width <= repeat_interval",
            ));
        }
        if !(self.amplitude >= 0.0) {
            return Err(Error::invalid("chirp.amplitude", "must be non-negative"));
        }
        Ok(())
    }

    pub fn low_edge_hz(&self) -> f64 {
        self.center_hz - 0.5 * self.span_hz
    }

    pub fn high_edge_hz(&self) -> f64 {
        self.center_hz + 0.5 * self.span_hz
    }

    /// Instantaneous frequency, or `None` between pulses.
    #[inline]
    pub fn frequency_at(&self, t: f64) -> Option<f64> {
        let phase = t.rem_euclid(self.repeat_interval_s);
        if phase >= self.pulse_width_s {
            return None;
        }
        let swept = self.span_hz * phase / self.pulse_width_s;
        Some(match self.direction {
            ChirpDirection::Up => self.low_edge_hz() + swept,
            ChirpDirection::Down => self.high_edge_hz() - swept,
        })
    }
}

/// Frequency-hopping sequence: `freqs_hz[i]` is held for `dwell_s`,
/// starting at `start_s`. Dwell windows are half-open, so a sample exactly
/// on a boundary belongs to the later dwell.
#[derive(Debug, Clone, PartialEq)]
pub struct HopSpec {
    pub freqs_hz: Vec<f64>,
    pub dwell_s: f64,
    pub amplitude: f64,
    pub start_s: f64,
    pub repeat: bool,
}

impl HopSpec {
    pub fn new(freqs_hz: Vec<f64>, dwell_s: f64) -> Self {
        HopSpec {
            freqs_hz,
            dwell_s,
            amplitude: 1.0,
            start_s: 0.0,
            repeat: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.freqs_hz.is_empty() {
            return Err(Error::invalid("hop.freqs_hz", "must not be empty"));
        }
        if self.freqs_hz.iter().any(|f| !(*f > 0.0)) {
            return Err(Error::invalid("hop.freqs_hz", "all frequencies must be positive"));
        }
        if !(self.dwell_s > 0.0) {
            return Err(Error::invalid("hop.dwell_s", "must be positive"));
        }
        if !(self.amplitude >= 0.0) {
            return Err(Error::invalid("hop.amplitude", "must be non-negative"));
        }
        Ok(())
    }

    /// Index of the active dwell at `t`, if any.
    #[inline]
    pub fn dwell_index(&self, t: f64) -> Option<usize> {
        if t < self.start_s {
            return None;
        }
        let x = (t - self.start_s) / self.dwell_s;
        // Snap values within rounding noise of a boundary onto it so the
        // half-open convention holds for grid times computed as k / rate.
        let nearest = x.round();
        let x = if (x - nearest).abs() < 1e-9 { nearest } else { x };
        let idx = x.floor() as usize;
        if self.repeat {
            Some(idx % self.freqs_hz.len())
        } else if idx < self.freqs_hz.len() {
            Some(idx)
        } else {
            None
        }
    }

    #[inline]
    pub fn frequency_at(&self, t: f64) -> Option<f64> {
        self.dwell_index(t).map(|i| self.freqs_hz[i])
    }
}

/// A single spectral line present at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Component {
    pub freq_hz: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpectralSnapshot {
    pub components: Vec<Component>,
}

impl SpectralSnapshot {
    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn total_power(&self) -> f64 {
        self.components.iter().map(|c| c.amplitude * c.amplitude).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RfScenario {
    pub tones: Vec<ToneSpec>,
    pub chirps: Vec<ChirpSpec>,
    pub hops: Vec<HopSpec>,
}

impl RfScenario {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn tone(freq_hz: f64) -> Self {
        RfScenario::new().with_tone(ToneSpec::new(freq_hz, 1.0))
    }

    pub fn tones(freqs_hz: &[f64]) -> Self {
        let mut s = RfScenario::new();
        for &f in freqs_hz {
            s.tones.push(ToneSpec::new(f, 1.0));
        }
        s
    }

    pub fn with_tone(mut self, tone: ToneSpec) -> Self {
        self.tones.push(tone);
        self
    }

    pub fn with_chirp(mut self, chirp: ChirpSpec) -> Self {
        self.chirps.push(chirp);
        self
    }

    pub fn with_hop(mut self, hop: HopSpec) -> Self {
        self.hops.push(hop);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.tones.is_empty() && self.chirps.is_empty() && self.hops.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.tones.iter().try_for_each(ToneSpec::validate)?;
        self.chirps.iter().try_for_each(ChirpSpec::validate)?;
        self.hops.iter().try_for_each(HopSpec::validate)
    }

    /// Components active at `t`, with coincident frequencies merged.
    pub fn instantaneous_components(&self, t: f64) -> SpectralSnapshot {
        let mut components: Vec<Component> = Vec::new();
        self.components().visit(t, |freq_hz, amplitude| {
            match components.iter_mut().find(|c| c.freq_hz == freq_hz) {
                // Tones were merged coherently already; anything else that
                // lands on the same line adds in power.
                Some(c) => c.amplitude = c.amplitude.hypot(amplitude),
                None => components.push(Component { freq_hz, amplitude }),
            }
        });
        SpectralSnapshot { components }
    }

    /// One snapshot per grid sample.
    pub fn sample_track(&self, grid: &TimeGrid) -> Vec<SpectralSnapshot> {
        grid.times().map(|t| self.instantaneous_components(t)).collect()
    }

    /// Allocation-free component source for the simulation hot loops.
    pub fn components(&self) -> ComponentSource<'_> {
        ComponentSource {
            tones: merge_tones(&self.tones),
            scenario: self,
        }
    }
}

/// Tones pre-merged by frequency (phasor sum), plus borrowed dynamic
/// emitters.
#[derive(Debug, Clone)]
pub struct ComponentSource<'a> {
    tones: Vec<Component>,
    scenario: &'a RfScenario,
}

impl ComponentSource<'_> {
    /// Calls `f(freq_hz, amplitude)` for every component active at `t`.
    #[inline]
    pub fn visit(&self, t: f64, mut f: impl FnMut(f64, f64)) {
        for c in &self.tones {
            f(c.freq_hz, c.amplitude);
        }
        for chirp in &self.scenario.chirps {
            if let Some(freq) = chirp.frequency_at(t) {
                f(freq, chirp.amplitude);
            }
        }
        for hop in &self.scenario.hops {
            if let Some(freq) = hop.frequency_at(t) {
                f(freq, hop.amplitude);
            }
        }
    }

    /// Sum of `amplitude²` over all components at `t`.
    pub fn power_at(&self, t: f64) -> f64 {
        let mut p = 0.0;
        self.visit(t, |_, a| p += a * a);
        p
    }
}

fn merge_tones(tones: &[ToneSpec]) -> Vec<Component> {
    let mut merged: Vec<(f64, f64, f64)> = Vec::with_capacity(tones.len());
    for tone in tones {
        let (re, im) = (
            tone.amplitude * tone.phase_rad.cos(),
            tone.amplitude * tone.phase_rad.sin(),
        );
        match merged.iter_mut().find(|(f, _, _)| *f == tone.freq_hz) {
            Some(entry) => {
                entry.1 += re;
                entry.2 += im;
            }
            None => merged.push((tone.freq_hz, re, im)),
        }
    }
    merged
        .into_iter()
        .map(|(freq_hz, re, im)| Component {
            freq_hz,
            amplitude: re.hypot(im),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const GHZ: f64 = 1e9;

    #[test]
    fn tone_is_time_invariant() {
        let s = RfScenario::tone(15.0 * GHZ);
        for t in [0.0, 1e-9, 0.123, 7.5] {
            let snap = s.instantaneous_components(t);
            assert_eq!(
                snap.components,
                vec![Component {
                    freq_hz: 15.0 * GHZ,
                    amplitude: 1.0
                }]
            );
        }
    }

    #[test]
    fn chirp_midpoint_is_center() {
        let chirp = ChirpSpec::new(15.0 * GHZ, 4.0 * GHZ, 1.6e-6, 4e-6);
        let s = RfScenario::new().with_chirp(chirp);
        let snap = s.instantaneous_components(0.8e-6);
        assert_eq!(snap.len(), 1);
        // f(t) = center - span/2 + span * t / pulse_width
        let oracle = 15.0 * GHZ - 2.0 * GHZ + 4.0 * GHZ * 0.8e-6 / 1.6e-6;
        assert_relative_eq!(snap.components[0].freq_hz, oracle, max_relative = 1e-12);
        assert_relative_eq!(snap.components[0].freq_hz, 15.0 * GHZ, max_relative = 1e-12);
    }

    #[test]
    fn chirp_is_silent_between_pulses() {
        let chirp = ChirpSpec::new(15.0 * GHZ, 4.0 * GHZ, 1.6e-6, 4e-6);
        assert!(chirp.frequency_at(2.0e-6).is_none());
        assert!(chirp.frequency_at(4.1e-6).is_some());
    }

    #[test]
    fn down_chirp_starts_high() {
        let mut chirp = ChirpSpec::new(15.0 * GHZ, 4.0 * GHZ, 1.6e-6, 4e-6);
        chirp.direction = ChirpDirection::Down;
        assert_relative_eq!(chirp.frequency_at(0.0).unwrap(), 17.0 * GHZ);
        assert_relative_eq!(chirp.frequency_at(0.4e-6).unwrap(), 16.0 * GHZ, max_relative = 1e-12);
    }

    #[test]
    fn hop_dwell_index() {
        let hop = HopSpec::new(vec![10.0 * GHZ, 13.0 * GHZ, 18.0 * GHZ], 80e-9);
        let s = RfScenario::new().with_hop(hop);
        let snap = s.instantaneous_components(90e-9);
        assert_eq!(snap.components[0].freq_hz, 13.0 * GHZ);
        // wraps around when repeating
        assert_eq!(s.instantaneous_components(250e-9).components[0].freq_hz, 10.0 * GHZ);
    }

    #[test]
    fn hop_without_repeat_ends() {
        let mut hop = HopSpec::new(vec![10.0 * GHZ, 13.0 * GHZ], 80e-9);
        hop.repeat = false;
        hop.start_s = 10e-9;
        assert!(hop.frequency_at(5e-9).is_none());
        assert_eq!(hop.frequency_at(10e-9), Some(10.0 * GHZ));
        assert!(hop.frequency_at(171e-9).is_none());
    }

    #[test]
    fn empty_scenario_track_is_empty() {
        let grid = TimeGrid::new(1e6, 16, 0.0).unwrap();
        let track = RfScenario::new().sample_track(&grid);
        assert_eq!(track.len(), 16);
        assert!(track.iter().all(SpectralSnapshot::is_empty));
    }

    #[test]
    fn tone_track_is_constant() {
        let grid = TimeGrid::new(1e6, 4, 0.0).unwrap();
        let track = RfScenario::tone(12.0 * GHZ).sample_track(&grid);
        assert_eq!(track.len(), 4);
        assert!(track.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn hop_track_follows_dwells() {
        // Oracle: sample k at 1 GS/s lies in dwell floor(k / 80).
        let grid = TimeGrid::new(1e9, 160, 0.0).unwrap();
        let s = RfScenario::new().with_hop(HopSpec::new(vec![10.0 * GHZ, 13.0 * GHZ], 80e-9));
        let track = s.sample_track(&grid);
        for (k, snap) in track.iter().enumerate() {
            let expected = if k / 80 == 0 { 10.0 * GHZ } else { 13.0 * GHZ };
            assert_eq!(snap.components[0].freq_hz, expected, "sample {k}");
        }
    }

    #[test]
    fn coincident_tones_merge_coherently() {
        let s = RfScenario::new()
            .with_tone(ToneSpec::new(10.0 * GHZ, 1.0))
            .with_tone(ToneSpec {
                freq_hz: 10.0 * GHZ,
                amplitude: 1.0,
                phase_rad: std::f64::consts::PI,
            })
            .with_tone(ToneSpec::new(11.0 * GHZ, 0.5));
        let snap = s.instantaneous_components(0.0);
        assert_eq!(snap.len(), 2);
        assert!(snap.components[0].amplitude < 1e-12);
        assert_eq!(snap.components[1].amplitude, 0.5);
    }

    #[test]
    fn validation_rejects_bad_specs() {
        assert!(RfScenario::tone(-1.0).validate().is_err());
        let bad_chirp = ChirpSpec::new(15.0 * GHZ, 4.0 * GHZ, 5e-6, 4e-6);
        assert!(RfScenario::new().with_chirp(bad_chirp).validate().is_err());
        assert!(RfScenario::new()
            .with_hop(HopSpec::new(vec![], 1e-9))
            .validate()
            .is_err());
        assert!(TimeGrid::new(0.0, 10, 0.0).is_err());
        assert!(TimeGrid::new(1.0, 0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn chirp_stays_within_span(
            center in 5.0e9..25.0e9f64,
            span in 0.1e9..8.0e9f64,
            duty in 0.05..1.0f64,
            t in 0.0..1e-3f64,
        ) {
            let chirp = ChirpSpec::new(center, span, 4e-6 * duty, 4e-6);
            if let Some(f) = chirp.frequency_at(t) {
                prop_assert!((f - center).abs() <= 0.5 * span * (1.0 + 1e-12));
            }
        }

        #[test]
        fn snapshots_are_deterministic(t in 0.0..1e-3f64) {
            let s = RfScenario::tone(9e9)
                .with_chirp(ChirpSpec::new(15e9, 4e9, 1.6e-6, 4e-6))
                .with_hop(HopSpec::new(vec![10e9, 13e9, 18e9], 80e-9));
            prop_assert_eq!(s.instantaneous_components(t), s.instantaneous_components(t));
        }
    }

    #[test]
    fn chirp_duty_cycle_matches_grid_fraction() {
        let chirp = ChirpSpec::new(15.0 * GHZ, 4.0 * GHZ, 1.6e-6, 4e-6);
        let grid = TimeGrid::new(1e9, 40_000, 0.0).unwrap();
        let active = grid.times().filter(|&t| chirp.frequency_at(t).is_some()).count();
        let fraction = active as f64 / grid.n_samples as f64;
        assert!((fraction - 0.4).abs() <= 1.0 / grid.n_samples as f64 * 10.0);
    }
}
