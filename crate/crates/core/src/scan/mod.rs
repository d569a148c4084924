//! Frequency-to-time mapping: a sawtooth-driven microring sweeps its
//! passband across the modulated spectrum, so each RF component shows up
//! as a pulse at a delay fixed by the (quadratic) heater law.

mod calibration;
mod estimate;
mod pulses;

pub use calibration::{calibrate, default_calibration_tones, CalibrationTable, TABLE_GUARD_FRACTION};
pub use estimate::{estimate_frequencies, estimate_hop_set, measure_span, Estimate, SpanRule};
pub use pulses::{detect_pulses, PulseDetector, PulseEvent};

use std::io::{self, Write};

use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::photonic::{pd_detect, stream_rng, thermal_lag, LinkModels, MrrModel, SAMPLING_STREAM};
use crate::rf_signals::{RfScenario, TimeGrid};

/// Default scan-trace sample rate.
pub const DEFAULT_SCAN_RATE: f64 = 1e6;

/// Periodic heater drive ramping from `v_min` to `v_max` every `period_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SawtoothDrive {
    pub v_min: f64,
    pub v_max: f64,
    pub period_s: f64,
    pub n_periods: usize,
}

impl Default for SawtoothDrive {
    fn default() -> Self {
        SawtoothDrive {
            v_min: 0.0,
            v_max: 4.0,
            period_s: 0.25,
            n_periods: 1,
        }
    }
}

impl SawtoothDrive {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_max > self.v_min && self.v_min >= 0.0) {
            return Err(Error::invalid("drive.v_max", "need 0 <= v_min < v_max"));
        }
        if !(self.period_s > 0.0) {
            return Err(Error::invalid("drive.period_s", "must be positive"));
        }
        if self.n_periods == 0 {
            return Err(Error::invalid("drive.n_periods", "must be at least 1"));
        }
        Ok(())
    }

    #[inline]
    pub fn voltage(&self, t: f64) -> f64 {
        let phase = (t / self.period_s).rem_euclid(1.0);
        self.v_min + (self.v_max - self.v_min) * phase
    }

    /// Grid covering all periods of the drive at `sample_rate`.
    pub fn grid(&self, sample_rate: f64) -> Result<TimeGrid> {
        TimeGrid::covering(sample_rate, self.period_s * self.n_periods as f64)
    }

    /// Lag-free sweep rate `df_s/dt` of the resonance when it sits at
    /// offset `f`.
    pub fn scan_slope(&self, mrr: &MrrModel, f: f64) -> f64 {
        let v2 = ((f - mrr.f_offset0_hz) / mrr.k_thermal_hz_per_v2).max(self.v_min * self.v_min);
        let dv_dt = (self.v_max - self.v_min) / self.period_s;
        mrr.k_thermal_hz_per_v2 * 2.0 * v2.sqrt() * dv_dt
    }

    /// Duration of a static tone's crossing pulse (FWHM) at offset `f`.
    pub fn pulse_width(&self, mrr: &MrrModel, f: f64) -> f64 {
        mrr.fwhm_hz / self.scan_slope(mrr, f)
    }
}

/// Detected power of the scanning path over one or more sweep periods.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTrace {
    pub grid: TimeGrid,
    pub power: Vec<f64>,
    pub drive: SawtoothDrive,
    /// Span after each sawtooth reset during which the heater is still
    /// relaxing and the resonance flies back across the band. Those
    /// samples are excluded from detection.
    pub retrace_blanking_s: f64,
}

impl ScanTrace {
    /// Time of sample `k` relative to the start of its sawtooth period.
    #[inline]
    pub fn phase_time(&self, k: usize) -> f64 {
        self.grid.time(k).rem_euclid(self.drive.period_s)
    }

    #[inline]
    pub fn is_blanked(&self, k: usize) -> bool {
        self.phase_time(k) < self.retrace_blanking_s
    }

    /// Number of (possibly partial) periods covered by the trace.
    pub fn periods_covered(&self) -> f64 {
        self.grid.duration() / self.drive.period_s
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time_s,power")?;
        for (k, p) in self.power.iter().enumerate() {
            writeln!(w, "{:e},{:e}", self.grid.time(k), p)?;
        }
        Ok(())
    }
}

/// Runs the scanning path.
///
/// Per sample: sawtooth voltage, heater lag on `V²`, resonance offset
/// `f_s`, then the Lorentzian drop-port response summed over the
/// modulated sidebands (plus the residual carrier and image sideband) and
/// finally photodetection.
///
/// Scope samples are not synchronized to the emitters: each sample sees the
/// scenario at a uniformly random instant within its sample interval
/// (seeded from the detector seed). Static scenarios are unaffected; for
/// chirps and hops this is what fills the envelope with random levels.
pub fn simulate_scan(
    scenario: &RfScenario,
    models: &LinkModels,
    drive: &SawtoothDrive,
    grid: &TimeGrid,
) -> Result<ScanTrace> {
    scenario.validate()?;
    models.validate()?;
    drive.validate()?;
    grid.validate()?;
    let needed = drive.period_s * drive.n_periods as f64;
    if grid.duration() + grid.dt() < needed {
        return Err(Error::invalid(
            "grid",
            format!("covers {:e} s but the drive needs {:e} s", grid.duration(), needed),
        ));
    }

    let drive_power: Vec<f64> = grid.times().map(|t| drive.voltage(t).powi(2)).collect();
    let lagged = thermal_lag(&drive_power, models.mrr.tau_thermal_s, grid)?;

    let source = scenario.components();
    let dynamic = !scenario.chirps.is_empty() || !scenario.hops.is_empty();
    let mut rng = stream_rng(models.pd.seed, SAMPLING_STREAM);
    let jitter = Uniform::new(0.0, grid.dt()).expect("positive sample interval");

    let modulator = &models.modulator;
    let mrr = &models.mrr;
    let image = modulator.image_fraction();
    let carrier = modulator.carrier_fraction();
    let gain = models.link.link_gain;

    let optical: Vec<f64> = lagged
        .iter()
        .enumerate()
        .map(|(k, &v2)| {
            let f_s = mrr.resonance_offset_from_power(v2);
            let t = grid.time(k);
            let t_emit = if dynamic { t + jitter.sample(&mut rng) } else { t };
            let mut sidebands = 0.0;
            let mut drive_total = 0.0;
            source.visit(t_emit, |f, a| {
                let p = a * a * modulator.sideband_weight(f);
                drive_total += p;
                sidebands += p * (mrr.drop_response(f - f_s) + image * mrr.drop_response(-f - f_s));
            });
            gain * (sidebands + carrier * drive_total * mrr.drop_response(-f_s))
        })
        .collect();

    Ok(ScanTrace {
        grid: *grid,
        power: pd_detect(&optical, &models.pd, grid),
        drive: *drive,
        retrace_blanking_s: 10.0 * models.mrr.tau_thermal_s,
    })
}
