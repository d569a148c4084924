//! Frequency-to-power mapping: after the band-stop filter, an unbalanced
//! MZI converts the instantaneous RF frequency into detected power, and a
//! monotone lookup inverts it sample by sample.

mod lut;

pub use lut::{build_lut, system_response, AcfLut, LutMode, DEFAULT_LUT_KNOTS};

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::photonic::{pd_detect_on_stream, LinkModels, Port, NOISE_STREAM, PORT1_NOISE_STREAM};
use crate::rf_signals::{RfScenario, TimeGrid};

/// Default dynamic-trace sample rate.
pub const DEFAULT_IFM_RATE: f64 = 1e9;
/// The discriminator band.
pub const DEFAULT_BAND: [f64; 2] = [10e9, 20e9];
/// Minimum samples per hop dwell or chirp pulse.
const MIN_SAMPLES_PER_DWELL: f64 = 10.0;

/// Detected power of one MZI port.
#[derive(Debug, Clone, PartialEq)]
pub struct IfmTrace {
    pub grid: TimeGrid,
    pub power: Vec<f64>,
    pub port: Port,
    /// Detected power of a unit-amplitude component at the port's band
    /// maximum.
    pub normalization: f64,
}

impl IfmTrace {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time_s,power")?;
        for (k, p) in self.power.iter().enumerate() {
            writeln!(w, "{:e},{:e}", self.grid.time(k), p)?;
        }
        Ok(())
    }
}

/// Runs the discriminator path for one MZI port.
///
/// Per sample the components are weighted by the modulator roll-off, the
/// band-stop filter and the port transmission, then detected. Port 1 draws
/// its detector noise from a separate stream so both ports can be combined.
pub fn simulate_ifm(
    scenario: &RfScenario,
    models: &LinkModels,
    grid: &TimeGrid,
    port: Port,
    band: [f64; 2],
) -> Result<IfmTrace> {
    scenario.validate()?;
    models.validate()?;
    grid.validate()?;
    check_dynamics_resolved(scenario, grid)?;

    let gain = models.link.link_gain;
    let source = scenario.components();
    let optical: Vec<f64> = grid
        .times()
        .map(|t| {
            let mut p = 0.0;
            source.visit(t, |f, a| {
                p += a
                    * a
                    * models.modulator.sideband_weight(f)
                    * models.notch_response(f)
                    * models.mzi.port_response(f, port);
            });
            gain * p
        })
        .collect();

    let stream = match port {
        Port::One => PORT1_NOISE_STREAM,
        Port::Two => NOISE_STREAM,
    };
    let mode = LutMode::SinglePort(port);
    let edge = |f| system_response(&models.mzi, Some(&models.modulator), mode, f);
    Ok(IfmTrace {
        grid: *grid,
        power: pd_detect_on_stream(&optical, &models.pd, grid, stream),
        port,
        normalization: gain * models.pd.responsivity * edge(band[0]).max(edge(band[1])),
    })
}

fn check_dynamics_resolved(scenario: &RfScenario, grid: &TimeGrid) -> Result<()> {
    let shortest = scenario
        .hops
        .iter()
        .map(|h| h.dwell_s)
        .chain(scenario.chirps.iter().map(|c| c.pulse_width_s))
        .fold(f64::INFINITY, f64::min);
    if shortest.is_finite() && shortest * grid.sample_rate < MIN_SAMPLES_PER_DWELL {
        return Err(Error::invalid(
            "grid.sample_rate",
            format!(
                "{:e} S/s gives fewer than {MIN_SAMPLES_PER_DWELL} samples per {shortest:e} s dwell",
                grid.sample_rate
            ),
        ));
    }
    Ok(())
}

/// Thresholds applied during inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractSettings {
    /// Minimum detectable level as a fraction of the trace normalization.
    pub noise_floor: f64,
    /// Implied frequencies above this are reported as noise.
    pub upper_limit_hz: f64,
}

impl Default for ExtractSettings {
    fn default() -> Self {
        ExtractSettings {
            noise_floor: 0.05,
            upper_limit_hz: 20e9,
        }
    }
}

/// Instantaneous frequency track; `None` marks a NOISE sample.
#[derive(Debug, Clone, PartialEq)]
pub struct InstFreqEstimate {
    pub times: Vec<f64>,
    pub freq: Vec<Option<f64>>,
    pub upper_limit_hz: f64,
}

impl InstFreqEstimate {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time_s,freq_hz_or_NOISE")?;
        for (t, f) in self.times.iter().zip(&self.freq) {
            match f {
                Some(f) => writeln!(w, "{:e},{:e}", t, f)?,
                None => writeln!(w, "{:e},NOISE", t)?,
            }
        }
        Ok(())
    }

    /// Fraction of samples carrying a frequency.
    pub fn valid_fraction(&self) -> f64 {
        if self.freq.is_empty() {
            return 0.0;
        }
        self.freq.iter().filter(|f| f.is_some()).count() as f64 / self.freq.len() as f64
    }
}

fn single_port_lut(lut: &AcfLut) -> Result<()> {
    match lut.mode {
        LutMode::SinglePort(_) => Ok(()),
        LutMode::Ratio => Err(Error::invalid(
            "lut.mode",
            "a ratio lookup needs both ports (use extract_inst_freq_ratio)",
        )),
    }
}

fn accept(freq: Option<f64>, settings: &ExtractSettings) -> Option<f64> {
    freq.filter(|&f| f <= settings.upper_limit_hz)
}

/// Per-sample inversion of a single-port trace.
///
/// A sample is NOISE when its normalized level is below the noise floor,
/// outside the tabulated range (above the band edge for a rising port), or
/// maps above the upper limit.
pub fn extract_inst_freq(trace: &IfmTrace, lut: &AcfLut, settings: &ExtractSettings) -> Result<InstFreqEstimate> {
    single_port_lut(lut)?;
    let freq = trace
        .power
        .iter()
        .map(|&p| {
            let level = p / trace.normalization;
            if level < settings.noise_floor {
                None
            } else {
                accept(lut.invert(level), settings)
            }
        })
        .collect();
    Ok(InstFreqEstimate {
        times: trace.grid.times().collect(),
        freq,
        upper_limit_hz: settings.upper_limit_hz,
    })
}

/// Per-sample inversion of the port-1/port-2 power ratio.
///
/// The stronger normalized port level is compared with the noise floor.
pub fn extract_inst_freq_ratio(
    port1: &IfmTrace,
    port2: &IfmTrace,
    lut: &AcfLut,
    settings: &ExtractSettings,
) -> Result<InstFreqEstimate> {
    if lut.mode != LutMode::Ratio {
        return Err(Error::invalid("lut.mode", "ratio extraction needs a ratio lookup"));
    }
    if port1.power.len() != port2.power.len() || port1.grid != port2.grid {
        return Err(Error::invalid("traces", "port traces must share one time grid"));
    }
    let freq = port1
        .power
        .iter()
        .zip(&port2.power)
        .map(|(&p1, &p2)| {
            let level = (p1 / port1.normalization).max(p2 / port2.normalization);
            if level < settings.noise_floor || p1 <= 0.0 || p2 <= 0.0 {
                None
            } else {
                accept(lut.invert(10.0 * (p1 / p2).log10()), settings)
            }
        })
        .collect();
    Ok(InstFreqEstimate {
        times: port1.grid.times().collect(),
        freq,
        upper_limit_hz: settings.upper_limit_hz,
    })
}

/// Frequency of a static scenario from the mean trace level.
pub fn estimate_static_frequency(trace: &IfmTrace, lut: &AcfLut, settings: &ExtractSettings) -> Result<f64> {
    single_port_lut(lut)?;
    let mean = trace.power.iter().sum::<f64>() / trace.power.len().max(1) as f64;
    let level = mean / trace.normalization;
    if !(level >= settings.noise_floor) {
        return Err(Error::NoSignal {
            level,
            floor: settings.noise_floor,
        });
    }
    lut.invert(level).ok_or(Error::OutsideLut { level })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::photonic::NotchFilterModel;
    use crate::rf_signals::{ChirpSpec, HopSpec};

    fn port2_lut(models: &LinkModels) -> AcfLut {
        build_lut(
            &models.mzi,
            Some(&models.modulator),
            DEFAULT_BAND,
            LutMode::SinglePort(Port::Two),
            DEFAULT_LUT_KNOTS,
        )
        .unwrap()
    }

    #[test]
    fn static_tone_gives_constant_power() {
        let models = LinkModels::default().noiseless();
        let grid = TimeGrid::new(DEFAULT_IFM_RATE, 100, 0.0).unwrap();
        let trace = simulate_ifm(&RfScenario::tone(15e9), &models, &grid, Port::Two, DEFAULT_BAND).unwrap();
        let expected = models.modulator.sideband_weight(15e9) * models.mzi.port_response(15e9, Port::Two);
        assert!(trace.power.iter().all(|&p| (p - expected).abs() < 1e-15));
    }

    #[test]
    fn noiseless_tone_inverts_within_lut_step() {
        let models = LinkModels::default().noiseless();
        let lut = port2_lut(&models);
        let grid = TimeGrid::new(DEFAULT_IFM_RATE, 64, 0.0).unwrap();
        let trace = simulate_ifm(&RfScenario::tone(14e9), &models, &grid, Port::Two, DEFAULT_BAND).unwrap();
        let est = extract_inst_freq(&trace, &lut, &ExtractSettings::default()).unwrap();
        for f in &est.freq {
            assert!((f.unwrap() - 14e9).abs() <= lut.step_hz());
        }
        let f = estimate_static_frequency(&trace, &lut, &ExtractSettings::default()).unwrap();
        assert!((f - 14e9).abs() <= lut.step_hz());
    }

    #[test]
    fn empty_scenario_has_no_signal() {
        let models = LinkModels::default();
        let lut = port2_lut(&models);
        let grid = TimeGrid::new(DEFAULT_IFM_RATE, 64, 0.0).unwrap();
        let trace = simulate_ifm(&RfScenario::new(), &models, &grid, Port::Two, DEFAULT_BAND).unwrap();
        assert!(matches!(
            estimate_static_frequency(&trace, &lut, &ExtractSettings::default()),
            Err(Error::NoSignal { .. })
        ));
    }

    #[test]
    fn above_band_is_noise() {
        let models = LinkModels::default().noiseless();
        let lut = port2_lut(&models);
        let grid = TimeGrid::new(DEFAULT_IFM_RATE, 8, 0.0).unwrap();
        let trace = simulate_ifm(&RfScenario::tone(24e9), &models, &grid, Port::Two, DEFAULT_BAND).unwrap();
        let est = extract_inst_freq(&trace, &lut, &ExtractSettings::default()).unwrap();
        assert!(est.freq.iter().all(Option::is_none));
    }

    #[test]
    fn notched_dwells_are_noise() {
        let models = LinkModels {
            notch: Some(NotchFilterModel::centered(10e9)),
            ..LinkModels::default()
        };
        let lut = port2_lut(&models);
        let grid = TimeGrid::new(DEFAULT_IFM_RATE, 3200, 0.0).unwrap();
        let hop = HopSpec::new(vec![10e9, 13e9, 15e9, 17e9], 80e-9);
        let scenario = RfScenario::new().with_hop(hop.clone());
        let trace = simulate_ifm(&scenario, &models, &grid, Port::Two, DEFAULT_BAND).unwrap();
        let est = extract_inst_freq(&trace, &lut, &ExtractSettings::default()).unwrap();
        for (k, f) in est.freq.iter().enumerate() {
            if hop.frequency_at(grid.time(k)) == Some(10e9) {
                assert!(f.is_none());
            }
        }
    }

    #[test]
    fn undersampled_hops_are_rejected() {
        let models = LinkModels::default();
        let grid = TimeGrid::new(1e8, 100, 0.0).unwrap();
        let scenario = RfScenario::new().with_hop(HopSpec::new(vec![13e9, 15e9], 80e-9));
        assert!(simulate_ifm(&scenario, &models, &grid, Port::Two, DEFAULT_BAND).is_err());
    }

    #[test]
    fn ratio_mode_cancels_modulator_roll_off() {
        let models = LinkModels::default().noiseless();
        let lut = build_lut(&models.mzi, None, DEFAULT_BAND, LutMode::Ratio, DEFAULT_LUT_KNOTS).unwrap();
        let grid = TimeGrid::new(DEFAULT_IFM_RATE, 400, 0.0).unwrap();
        let scenario = RfScenario::new().with_chirp(ChirpSpec::new(15e9, 6e9, 160e-9, 200e-9));
        let p1 = simulate_ifm(&scenario, &models, &grid, Port::One, DEFAULT_BAND).unwrap();
        let p2 = simulate_ifm(&scenario, &models, &grid, Port::Two, DEFAULT_BAND).unwrap();
        let est = extract_inst_freq_ratio(&p1, &p2, &lut, &ExtractSettings::default()).unwrap();
        let chirp = &scenario.chirps[0];
        for (k, f) in est.freq.iter().enumerate() {
            if let (Some(f), Some(truth)) = (f, chirp.frequency_at(grid.time(k))) {
                assert!((f - truth).abs() <= lut.step_hz());
            }
        }
        assert!(est.valid_fraction() > 0.7);
        assert!(extract_inst_freq(&p1, &lut, &ExtractSettings::default()).is_err());
    }

    #[test]
    fn two_tones_read_as_summed_power() {
        let models = LinkModels::default().noiseless();
        let lut = port2_lut(&models);
        let grid = TimeGrid::new(DEFAULT_IFM_RATE, 8, 0.0).unwrap();
        let one = simulate_ifm(&RfScenario::tone(12e9), &models, &grid, Port::Two, DEFAULT_BAND).unwrap();
        let two = simulate_ifm(
            &RfScenario::tones(&[12e9, 13e9]),
            &models,
            &grid,
            Port::Two,
            DEFAULT_BAND,
        )
        .unwrap();
        let other = simulate_ifm(&RfScenario::tone(13e9), &models, &grid, Port::Two, DEFAULT_BAND).unwrap();
        assert!(two.power[0] > one.power[0] && two.power[0] > other.power[0]);
        let est = extract_inst_freq(&two, &lut, &ExtractSettings::default()).unwrap();
        // the summed level lies above both single-tone levels
        assert!(est.freq[0].is_none_or(|f| f > 13e9 + lut.step_hz()));
    }
}
