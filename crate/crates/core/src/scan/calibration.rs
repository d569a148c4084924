use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::photonic::LinkModels;
use crate::rf_signals::{RfScenario, TimeGrid};

use super::{detect_pulses, simulate_scan, PulseDetector, SawtoothDrive};

/// Fraction of the calibrated delay range accepted beyond each edge before
/// an event is flagged out of band.
pub const TABLE_GUARD_FRACTION: f64 = 0.02;

/// Quadratic frequency-versus-delay lookup `f = a t² + b t + c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationTable {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub fit_residual_rms: f64,
}

impl CalibrationTable {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.a * t + self.b) * t + self.c
    }

    /// `df/dt` at delay `t`.
    #[inline]
    pub fn slope(&self, t: f64) -> f64 {
        2.0 * self.a * t + self.b
    }

    /// Whether `t` lies in the valid range widened by the guard band.
    pub fn contains(&self, t: f64) -> bool {
        let guard = TABLE_GUARD_FRACTION * (self.t_max - self.t_min);
        t >= self.t_min - guard && t <= self.t_max + guard
    }

    pub fn is_monotone(&self) -> bool {
        self.slope(self.t_min) > 0.0 && self.slope(self.t_max) > 0.0
    }

    /// Three-line text record: `a b c`, `t_min t_max`, `residual_rms`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:e} {:e} {:e}", self.a, self.b, self.c);
        let _ = writeln!(s, "{:e} {:e}", self.t_min, self.t_max);
        let _ = writeln!(s, "{:e}", self.fit_residual_rms);
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let mut row = |n: usize, what: &str| -> Result<Vec<f64>> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("calibration table: missing {what} line")))?;
            let vals = line
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("calibration table {what}: {e}")))?;
            if vals.len() != n {
                return Err(Error::Parse(format!(
                    "calibration table {what}: expected {n} values, found {}",
                    vals.len()
                )));
            }
            Ok(vals)
        };
        let coeffs = row(3, "coefficient")?;
        let range = row(2, "range")?;
        let resid = row(1, "residual")?;
        let table = CalibrationTable {
            a: coeffs[0],
            b: coeffs[1],
            c: coeffs[2],
            t_min: range[0],
            t_max: range[1],
            fit_residual_rms: resid[0],
        };
        if !(table.t_max > table.t_min) || !table.fit_residual_rms.is_finite() {
            return Err(Error::Parse("calibration table: invalid range or residual".into()));
        }
        Ok(table)
    }
}

/// 10 GHz to 20 GHz in 1 GHz steps.
pub fn default_calibration_tones() -> Vec<f64> {
    (10..=20).map(|g| g as f64 * 1e9).collect()
}

/// Simulates each calibration tone on its own, records the pulse delay and
/// fits the quadratic lookup by least squares.
///
/// Every tone must produce exactly one pulse per scan period; the delays
/// of repeated periods are averaged.
pub fn calibrate(
    models: &LinkModels,
    drive: &SawtoothDrive,
    tone_freqs: &[f64],
    grid: &TimeGrid,
) -> Result<CalibrationTable> {
    if tone_freqs.len() < 3 {
        return Err(Error::Calibration(format!(
            "{} tones cannot determine a quadratic (need at least 3)",
            tone_freqs.len()
        )));
    }
    let detector = PulseDetector::for_scan(models, drive);
    let mut delays = Vec::with_capacity(tone_freqs.len());
    for &f in tone_freqs {
        let trace = simulate_scan(&RfScenario::tone(f), models, drive, grid)?;
        let events = detect_pulses(&trace, &detector);
        if events.len() != drive.n_periods {
            return Err(Error::CalibrationTone {
                freq_hz: f,
                reason: format!("expected {} pulse(s), found {}", drive.n_periods, events.len()),
            });
        }
        delays.push(events.iter().map(|e| e.peak_time).sum::<f64>() / events.len() as f64);
    }
    fit_quadratic(&delays, tone_freqs)
}

/// OLS fit of `f = a t² + b t + c`. The delays are centered and scaled
/// before solving to keep the normal matrix well conditioned.
pub(crate) fn fit_quadratic(t: &[f64], f: &[f64]) -> Result<CalibrationTable> {
    let n = t.len();
    let mean = t.iter().sum::<f64>() / n as f64;
    let scale = t.iter().map(|&x| (x - mean).abs()).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::Calibration("all pulse delays coincide".into()));
    }
    let design = DMatrix::from_fn(n, 3, |i, j| ((t[i] - mean) / scale).powi(2 - j as i32));
    let rhs = DVector::from_column_slice(f);
    let (p2, p1, p0) = {
        let sol = design
            .clone()
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|e| Error::Calibration(e.to_string()))?;
        (sol[0], sol[1], sol[2])
    };
    // Expand p2 u² + p1 u + p0 with u = (t - mean) / scale.
    let a = p2 / (scale * scale);
    let b = p1 / scale - 2.0 * p2 * mean / (scale * scale);
    let c = p0 - p1 * mean / scale + p2 * mean * mean / (scale * scale);

    let residual = (t
        .iter()
        .zip(f)
        .map(|(&ti, &fi)| {
            let u = (ti - mean) / scale;
            (p2 * u * u + p1 * u + p0 - fi).powi(2)
        })
        .sum::<f64>()
        / n as f64)
        .sqrt();

    let t_min = t.iter().copied().fold(f64::INFINITY, f64::min);
    let t_max = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let table = CalibrationTable {
        a,
        b,
        c,
        t_min,
        t_max,
        fit_residual_rms: residual,
    };
    if !table.is_monotone() {
        return Err(Error::Calibration(format!(
            "fitted lookup is not increasing on [{t_min:e}, {t_max:e}] s"
        )));
    }
    if !residual.is_finite() {
        return Err(Error::Calibration("fit residual is not finite".into()));
    }
    Ok(table)
}
