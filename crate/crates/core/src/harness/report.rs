use std::fmt::{self, Write as _};

use crate::classifier::ClassLabel;
use crate::error::{Error, Result};

use super::Mode;

/// Root-mean-square of `estimates - truths`.
pub fn rms_error(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    if estimates.len() != truths.len() {
        return Err(Error::LengthMismatch {
            left: estimates.len(),
            right: truths.len(),
        });
    }
    if estimates.is_empty() {
        return Err(Error::invalid("estimates", "need at least one pair"));
    }
    let ss: f64 = estimates.iter().zip(truths).map(|(e, t)| (e - t).powi(2)).sum();
    Ok((ss / estimates.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToneResult {
    pub truth_hz: f64,
    /// `None` when no in-band estimate was produced.
    pub estimate_hz: Option<f64>,
}

impl ToneResult {
    pub fn error_hz(&self) -> Option<f64> {
        self.estimate_hz.map(|e| e - self.truth_hz)
    }
}

/// Outcome of an instantaneous-frequency run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DynamicMetrics {
    pub n_samples: usize,
    pub valid_fraction: f64,
    /// Samples where the scenario has one in-band, unfiltered component.
    pub n_in_band: usize,
    /// In-band samples that were nonetheless flagged NOISE.
    pub n_in_band_missed: usize,
    pub in_band_rms_error_hz: Option<f64>,
    pub max_abs_error_hz: Option<f64>,
    /// Samples whose true component is suppressed by the band-stop filter.
    pub n_filtered: usize,
    pub n_filtered_flagged_noise: usize,
    /// Median estimate of each consecutive dwell, in time order.
    pub dwell_truths_hz: Vec<f64>,
    pub dwell_medians_hz: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub mode: Mode,
    pub seeds: Vec<u64>,
    pub per_tone: Vec<ToneResult>,
    pub rms_error_hz: Option<f64>,
    pub calibration_residual_rms_hz: Option<f64>,
    pub span_hz: Option<f64>,
    pub span_truth_hz: Option<f64>,
    /// Signed relative span error.
    pub span_error: Option<f64>,
    pub hop_set_hz: Vec<f64>,
    pub hop_truth_hz: Vec<f64>,
    pub labels: Vec<ClassLabel>,
    pub expected_label: Option<ClassLabel>,
    pub dynamic: Option<DynamicMetrics>,
    pub runtime_s: f64,
}

impl MetricsReport {
    pub fn new(mode: Mode, seed: u64) -> Self {
        MetricsReport {
            mode,
            seeds: vec![seed],
            per_tone: Vec::new(),
            rms_error_hz: None,
            calibration_residual_rms_hz: None,
            span_hz: None,
            span_truth_hz: None,
            span_error: None,
            hop_set_hz: Vec::new(),
            hop_truth_hz: Vec::new(),
            labels: Vec::new(),
            expected_label: None,
            dynamic: None,
            runtime_s: 0.0,
        }
    }

    pub fn missed_tones(&self) -> usize {
        self.per_tone.iter().filter(|t| t.estimate_hz.is_none()).count()
    }

    /// RMS over the tones that produced an estimate.
    pub fn compute_rms(&mut self) -> Result<()> {
        let (est, truth): (Vec<f64>, Vec<f64>) = self
            .per_tone
            .iter()
            .filter_map(|t| t.estimate_hz.map(|e| (e, t.truth_hz)))
            .unzip();
        self.rms_error_hz = if est.is_empty() {
            None
        } else {
            Some(rms_error(&est, &truth)?)
        };
        Ok(())
    }

    /// Fraction of labels equal to the expected one.
    pub fn accuracy(&self) -> Option<f64> {
        let want = self.expected_label?;
        if self.labels.is_empty() {
            return None;
        }
        Some(self.labels.iter().filter(|&&l| l == want).count() as f64 / self.labels.len() as f64)
    }

    /// Largest absolute distance between each true hop and its nearest
    /// estimate.
    pub fn hop_max_error_hz(&self) -> Option<f64> {
        if self.hop_truth_hz.is_empty() || self.hop_set_hz.is_empty() {
            return None;
        }
        Some(
            self.hop_truth_hz
                .iter()
                .map(|t| {
                    self.hop_set_hz
                        .iter()
                        .map(|e| (e - t).abs())
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max),
        )
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| format!("{x:e}"))
}

fn list<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    if items.is_empty() {
        return "none".to_string();
    }
    items.iter().map(f).collect::<Vec<_>>().join(",")
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let _ = writeln!(s, "mode = {}", self.mode);
        let _ = writeln!(s, "seeds = {}", list(&self.seeds, |x| x.to_string()));
        let _ = writeln!(s, "n_tones = {}", self.per_tone.len());
        let _ = writeln!(s, "missed_tones = {}", self.missed_tones());
        let _ = writeln!(
            s,
            "per_tone_errors_hz = {}",
            list(&self.per_tone, |t| opt(t.error_hz()))
        );
        let _ = writeln!(s, "rms_error_hz = {}", opt(self.rms_error_hz));
        let _ = writeln!(
            s,
            "calibration_residual_rms_hz = {}",
            opt(self.calibration_residual_rms_hz)
        );
        let _ = writeln!(s, "span_hz = {}", opt(self.span_hz));
        let _ = writeln!(s, "span_truth_hz = {}", opt(self.span_truth_hz));
        let _ = writeln!(s, "span_error = {}", opt(self.span_error));
        let _ = writeln!(s, "hop_set_hz = {}", list(&self.hop_set_hz, |x| format!("{x:e}")));
        let _ = writeln!(s, "hop_max_error_hz = {}", opt(self.hop_max_error_hz()));
        let _ = writeln!(s, "labels = {}", list(&self.labels, |l| l.to_string()));
        let _ = writeln!(
            s,
            "expected_label = {}",
            self.expected_label.map_or("none".to_string(), |l| l.to_string())
        );
        let _ = writeln!(s, "classification_accuracy = {}", opt(self.accuracy()));
        if let Some(d) = &self.dynamic {
            let _ = writeln!(s, "dynamic_samples = {}", d.n_samples);
            let _ = writeln!(s, "dynamic_valid_fraction = {:e}", d.valid_fraction);
            let _ = writeln!(s, "dynamic_in_band_samples = {}", d.n_in_band);
            let _ = writeln!(s, "dynamic_in_band_missed = {}", d.n_in_band_missed);
            let _ = writeln!(s, "dynamic_in_band_rms_error_hz = {}", opt(d.in_band_rms_error_hz));
            let _ = writeln!(s, "dynamic_max_abs_error_hz = {}", opt(d.max_abs_error_hz));
            let _ = writeln!(s, "dynamic_filtered_samples = {}", d.n_filtered);
            let _ = writeln!(s, "dynamic_filtered_flagged_noise = {}", d.n_filtered_flagged_noise);
            let _ = writeln!(
                s,
                "dwell_truths_hz = {}",
                list(&d.dwell_truths_hz, |x| format!("{x:e}"))
            );
            let _ = writeln!(s, "dwell_medians_hz = {}", list(&d.dwell_medians_hz, |x| opt(*x)));
        }
        let _ = writeln!(s, "runtime_s = {:.3}", self.runtime_s);
        f.write_str(&s)
    }
}
