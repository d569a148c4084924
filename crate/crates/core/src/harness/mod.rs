//! Configuration-driven experiment runner.
//!
//! A run reads a [`RunConfig`], executes one [`Mode`], writes its CSV and
//! text artifacts into an output directory and returns a
//! [`MetricsReport`]. See `README.md` for the full key reference.

mod config;
mod report;
mod run;

pub use config::ConfigFile;
pub use report::{rms_error, DynamicMetrics, MetricsReport, ToneResult};
pub use run::{run, run_single, Artifact, Outcome};

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::classifier::ClassLabel;
use crate::error::{Error, Result};
use crate::ifm::{DEFAULT_BAND, DEFAULT_IFM_RATE, DEFAULT_LUT_KNOTS};
use crate::photonic::{LinkModels, NotchFilterModel, Port};
use crate::rf_signals::{ChirpDirection, ChirpSpec, HopSpec, RfScenario, ToneSpec};
use crate::scan::{default_calibration_tones, SawtoothDrive, DEFAULT_SCAN_RATE};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Calibrate,
    Measure,
    Classify,
    Dynamic,
    Sweep,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Calibrate => "calibrate",
            Mode::Measure => "measure",
            Mode::Classify => "classify",
            Mode::Dynamic => "dynamic",
            Mode::Sweep => "sweep",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "calibrate" => Ok(Mode::Calibrate),
            "measure" => Ok(Mode::Measure),
            "classify" => Ok(Mode::Classify),
            "dynamic" => Ok(Mode::Dynamic),
            "sweep" => Ok(Mode::Sweep),
            _ => Err(format!(
                "unknown mode `{s}` (expected calibrate, measure, classify, dynamic or sweep)"
            )),
        }
    }
}

/// Which engine a measure run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pipeline {
    /// Scanning ring and calibrated delay lookup.
    Fttm,
    /// Discriminator power and inverted lookup.
    Ftpm,
}

impl FromStr for Pipeline {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fttm" => Ok(Pipeline::Fttm),
            "ftpm" => Ok(Pipeline::Ftpm),
            _ => Err(format!("unknown pipeline `{s}` (expected fttm or ftpm)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IfmLutMode {
    SinglePort,
    Ratio,
}

impl FromStr for IfmLutMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "single_port" => Ok(IfmLutMode::SinglePort),
            "ratio" => Ok(IfmLutMode::Ratio),
            _ => Err(format!("unknown lookup mode `{s}` (expected single_port or ratio)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IfmSettings {
    pub sample_rate_hz: f64,
    pub duration_s: f64,
    pub lut_mode: IfmLutMode,
    pub port: Port,
    pub band_hz: [f64; 2],
    pub n_knots: usize,
    pub noise_floor: f64,
    pub upper_limit_hz: f64,
}

impl Default for IfmSettings {
    fn default() -> Self {
        IfmSettings {
            sample_rate_hz: DEFAULT_IFM_RATE,
            duration_s: 1e-6,
            lut_mode: IfmLutMode::SinglePort,
            port: Port::Two,
            band_hz: DEFAULT_BAND,
            n_knots: DEFAULT_LUT_KNOTS,
            noise_floor: 0.05,
            upper_limit_hz: 20e9,
        }
    }
}

/// Optional overrides of the derived detector and classifier defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DetectionOverrides {
    pub noise_floor_quantile: Option<f64>,
    pub min_prominence: Option<f64>,
    pub fill_threshold: Option<f64>,
    pub gap_threshold_s: Option<f64>,
    pub span_threshold_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Mode named in the file; the command line may override it.
    pub mode: Option<Mode>,
    pub seed: u64,
    pub scenario: RfScenario,
    pub models: LinkModels,
    pub drive: SawtoothDrive,
    pub scan_rate_hz: f64,
    pub calibration_tones_hz: Vec<f64>,
    /// Previously written calibration table to reuse instead of calibrating.
    pub calibration_file: Option<PathBuf>,
    /// Calibrate with detector noise disabled.
    pub calibration_noiseless: bool,
    pub pipeline: Pipeline,
    /// Tone grid for measure mode; when absent the scenario is measured.
    pub measure_tones_hz: Option<Vec<f64>>,
    pub ifm: IfmSettings,
    pub detection: DetectionOverrides,
    pub expected_label: Option<ClassLabel>,
    pub sweep_mode: Mode,
    pub sweep_seeds: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: None,
            seed: 0,
            scenario: RfScenario::new(),
            models: LinkModels::default(),
            drive: SawtoothDrive::default(),
            scan_rate_hz: DEFAULT_SCAN_RATE,
            calibration_tones_hz: default_calibration_tones(),
            calibration_file: None,
            calibration_noiseless: true,
            pipeline: Pipeline::Fttm,
            measure_tones_hz: None,
            ifm: IfmSettings::default(),
            detection: DetectionOverrides::default(),
            expected_label: None,
            sweep_mode: Mode::Measure,
            sweep_seeds: 10,
        }
    }
}

fn tone_grid(cfg: &ConfigFile, prefix: &str) -> Result<Option<Vec<f64>>> {
    let list_key = format!("{prefix}.tones_hz");
    if let Some(list) = cfg.get_list::<f64>(&list_key)? {
        return Ok(Some(list));
    }
    let keys = [
        format!("{prefix}.start_hz"),
        format!("{prefix}.stop_hz"),
        format!("{prefix}.step_hz"),
    ];
    let vals = [
        cfg.get::<f64>(&keys[0])?,
        cfg.get::<f64>(&keys[1])?,
        cfg.get::<f64>(&keys[2])?,
    ];
    match vals {
        [None, None, None] => Ok(None),
        [Some(start), Some(stop), Some(step)] => {
            if !(step > 0.0 && stop >= start) {
                return Err(Error::Parse(format!(
                    "field `{}`: need step > 0 and stop >= start",
                    keys[2]
                )));
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok(Some((0..=n).map(|i| start + i as f64 * step).collect()))
        }
        _ => Err(Error::Parse(format!(
            "fields `{}`, `{}` and `{}` must be given together",
            keys[0], keys[1], keys[2]
        ))),
    }
}

fn scenario_from(cfg: &ConfigFile) -> Result<RfScenario> {
    let mut s = RfScenario::new();
    if let Some(freqs) = cfg.get_list::<f64>("scenario.tones_hz")? {
        let amps = cfg
            .get_list::<f64>("scenario.tone_amplitudes")?
            .unwrap_or_else(|| vec![1.0; freqs.len()]);
        if amps.len() != freqs.len() {
            return Err(Error::Parse(
                "field `scenario.tone_amplitudes`: length differs from `scenario.tones_hz`".into(),
            ));
        }
        for (f, a) in freqs.into_iter().zip(amps) {
            s.tones.push(ToneSpec::new(f, a));
        }
    }
    if cfg.has_section("scenario.chirp") {
        let need = |k: &str| -> Result<f64> {
            cfg.get::<f64>(k)?
                .ok_or_else(|| Error::Parse(format!("field `{k}`: required for a chirp")))
        };
        let mut chirp = ChirpSpec::new(
            need("scenario.chirp.center_hz")?,
            need("scenario.chirp.span_hz")?,
            need("scenario.chirp.pulse_width_s")?,
            need("scenario.chirp.repeat_s")?,
        );
        chirp.amplitude = cfg.get_or("scenario.chirp.amplitude", 1.0)?;
        chirp.direction = match cfg.get::<String>("scenario.chirp.direction")?.as_deref() {
            None | Some("up") => ChirpDirection::Up,
            Some("down") => ChirpDirection::Down,
            Some(other) => {
                return Err(Error::Parse(format!(
                    "field `scenario.chirp.direction`: `{other}` (expected up or down)"
                )))
            }
        };
        s.chirps.push(chirp);
    }
    if cfg.has_section("scenario.hop") {
        let freqs = cfg
            .get_list::<f64>("scenario.hop.freqs_hz")?
            .ok_or_else(|| Error::Parse("field `scenario.hop.freqs_hz`: required for a hop".into()))?;
        let dwell = cfg
            .get::<f64>("scenario.hop.dwell_s")?
            .ok_or_else(|| Error::Parse("field `scenario.hop.dwell_s`: required for a hop".into()))?;
        let mut hop = HopSpec::new(freqs, dwell);
        hop.amplitude = cfg.get_or("scenario.hop.amplitude", 1.0)?;
        hop.start_s = cfg.get_or("scenario.hop.start_s", 0.0)?;
        hop.repeat = cfg.get_or("scenario.hop.repeat", true)?;
        s.hops.push(hop);
    }
    Ok(s)
}

fn models_from(cfg: &ConfigFile) -> Result<LinkModels> {
    let mut m = LinkModels::default();
    macro_rules! set {
        ($field:expr, $key:literal) => {
            if let Some(v) = cfg.get($key)? {
                $field = v;
            }
        };
    }
    set!(m.modulator.bw_3db_hz, "modulator.bw_3db_hz");
    set!(m.modulator.carrier_suppression_db, "modulator.carrier_suppression_db");
    set!(m.modulator.image_suppression_db, "modulator.image_suppression_db");
    set!(m.mrr.fsr_hz, "mrr.fsr_hz");
    set!(m.mrr.fwhm_hz, "mrr.fwhm_hz");
    set!(m.mrr.f_offset0_hz, "mrr.f_offset0_hz");
    set!(m.mrr.k_thermal_hz_per_v2, "mrr.k_thermal_hz_per_v2");
    set!(m.mrr.tau_thermal_s, "mrr.tau_thermal_s");
    set!(m.mrr.peak_transmission, "mrr.peak_transmission");
    set!(m.mzi.fsr_hz, "mzi.fsr_hz");
    set!(m.mzi.extinction_ratio_db, "mzi.extinction_ratio_db");
    set!(m.mzi.f_ref_hz, "mzi.f_ref_hz");
    set!(m.mzi.insertion_loss_db, "mzi.insertion_loss_db");
    set!(m.pd.bw_3db_hz, "pd.bw_3db_hz");
    set!(m.pd.responsivity, "pd.responsivity");
    set!(m.pd.noise_sigma, "pd.noise_sigma");
    set!(m.link.link_gain, "link.gain");
    set!(m.link.carrier_freq_hz, "link.carrier_freq_hz");

    let notch_on = cfg.get_or("notch.enabled", false)?;
    let mut notch = NotchFilterModel::default();
    if let Some(c) = cfg.get_list::<f64>("notch.centers_hz")? {
        notch.centers_hz = c;
    }
    set!(notch.fwhm_each_hz, "notch.fwhm_each_hz");
    set!(notch.rejection_db, "notch.rejection_db");
    m.notch = notch_on.then_some(notch);
    Ok(m)
}

impl RunConfig {
    /// Parses configuration text. Relative file references resolve against
    /// `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let cfg = ConfigFile::parse(text)?;
        let d = RunConfig::default();
        let mut rc = RunConfig {
            mode: cfg.get::<Mode>("mode")?,
            seed: cfg.get_or("seed", d.seed)?,
            scenario: scenario_from(&cfg)?,
            models: models_from(&cfg)?,
            ..d
        };
        rc.models.pd.seed = rc.seed;

        if let Some(v) = cfg.get("drive.v_min_v")? {
            rc.drive.v_min = v;
        }
        if let Some(v) = cfg.get("drive.v_max_v")? {
            rc.drive.v_max = v;
        }
        if let Some(v) = cfg.get("drive.period_s")? {
            rc.drive.period_s = v;
        }
        if let Some(v) = cfg.get("drive.n_periods")? {
            rc.drive.n_periods = v;
        }
        rc.scan_rate_hz = cfg.get_or("scan.sample_rate_hz", rc.scan_rate_hz)?;

        if let Some(t) = tone_grid(&cfg, "calibration")? {
            rc.calibration_tones_hz = t;
        }
        if let Some(p) = cfg.get::<String>("calibration.file")? {
            let path = base_dir.join(p);
            if !path.is_file() {
                return Err(Error::Parse(format!(
                    "field `calibration.file`: {} does not exist",
                    path.display()
                )));
            }
            rc.calibration_file = Some(path);
        }
        rc.calibration_noiseless = cfg.get_or("calibration.noiseless", rc.calibration_noiseless)?;

        rc.pipeline = cfg.get_or("measure.pipeline", rc.pipeline)?;
        rc.measure_tones_hz = tone_grid(&cfg, "measure")?;

        let ifm = &mut rc.ifm;
        ifm.sample_rate_hz = cfg.get_or("ifm.sample_rate_hz", ifm.sample_rate_hz)?;
        ifm.duration_s = cfg.get_or("ifm.duration_s", ifm.duration_s)?;
        ifm.lut_mode = cfg.get_or("ifm.lut_mode", ifm.lut_mode)?;
        if let Some(n) = cfg.get::<u8>("ifm.port")? {
            ifm.port = Port::from_number(n).ok_or_else(|| Error::Parse("field `ifm.port`: must be 1 or 2".into()))?;
        }
        if let Some(b) = cfg.get_list::<f64>("ifm.band_hz")? {
            ifm.band_hz = b
                .try_into()
                .map_err(|_| Error::Parse("field `ifm.band_hz`: expected two values".into()))?;
        }
        ifm.n_knots = cfg.get_or("ifm.n_knots", ifm.n_knots)?;
        ifm.noise_floor = cfg.get_or("ifm.noise_floor", ifm.noise_floor)?;
        ifm.upper_limit_hz = cfg.get_or("ifm.upper_limit_hz", ifm.upper_limit_hz)?;

        rc.detection = DetectionOverrides {
            noise_floor_quantile: cfg.get("detector.noise_floor_quantile")?,
            min_prominence: cfg.get("detector.min_prominence")?,
            fill_threshold: cfg.get("classifier.fill_threshold")?,
            gap_threshold_s: cfg.get("classifier.gap_threshold_s")?,
            span_threshold_fraction: cfg.get("span.threshold_fraction")?,
        };
        rc.expected_label = cfg.get("classifier.expected_label")?;

        rc.sweep_mode = cfg.get_or("sweep.mode", rc.sweep_mode)?;
        if rc.sweep_mode == Mode::Sweep {
            return Err(Error::Parse(
                "field `sweep.mode`: a sweep cannot nest another sweep".into(),
            ));
        }
        rc.sweep_seeds = cfg.get_or("sweep.n_seeds", rc.sweep_seeds)?;

        cfg.finish()?;
        Ok(rc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        RunConfig::parse(&text, base)
    }

    /// Same configuration with a different seed.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self.models.pd.seed = seed;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, Path::new("."))
    }

    #[test]
    fn defaults_from_empty_file() {
        let rc = parse("").unwrap();
        assert_eq!(rc, RunConfig::default());
    }

    #[test]
    fn full_scenario() {
        let rc = parse(
            "mode = classify\nseed = 7\nscenario.tones_hz = 10e9, 15e9\n\
             scenario.chirp.center_hz = 15e9\nscenario.chirp.span_hz = 4e9\n\
             scenario.chirp.pulse_width_s = 1.6e-6\nscenario.chirp.repeat_s = 4e-6\n\
             scenario.hop.freqs_hz = 10e9, 13e9\nscenario.hop.dwell_s = 80e-9\n\
             notch.enabled = true\nnotch.centers_hz = 11e9\nmrr.fwhm_hz = 1e9\ndrive.n_periods = 3\n",
        )
        .unwrap();
        assert_eq!(rc.mode, Some(Mode::Classify));
        assert_eq!(rc.models.pd.seed, 7);
        assert_eq!(rc.scenario.tones.len(), 2);
        assert_eq!(rc.scenario.chirps[0].span_hz, 4e9);
        assert_eq!(rc.scenario.hops[0].freqs_hz, vec![10e9, 13e9]);
        assert_eq!(rc.models.notch.as_ref().unwrap().centers_hz, vec![11e9]);
        assert_eq!(rc.models.mrr.fwhm_hz, 1e9);
        assert_eq!(rc.drive.n_periods, 3);
    }

    #[test]
    fn tone_range() {
        let rc = parse("measure.start_hz = 10e9\nmeasure.stop_hz = 20e9\nmeasure.step_hz = 0.5e9\n").unwrap();
        let tones = rc.measure_tones_hz.unwrap();
        assert_eq!(tones.len(), 21);
        assert_eq!(tones[20], 20e9);
        assert!(parse("measure.start_hz = 10e9\n").is_err());
    }

    #[test]
    fn invalid_mode_names_the_field() {
        let e = parse("seed = 1\nmode = scan\n").unwrap_err().to_string();
        assert!(e.contains("line 2: field `mode`"), "{e}");
        assert!(e.contains("unknown mode `scan`"), "{e}");
    }

    #[test]
    fn missing_calibration_file_is_rejected() {
        let e = parse("calibration.file = /nonexistent/table.txt\n")
            .unwrap_err()
            .to_string();
        assert!(e.contains("calibration.file"), "{e}");
    }

    #[test]
    fn typo_is_rejected() {
        let e = parse("mrr.fwhm = 1e9\n").unwrap_err().to_string();
        assert!(e.contains("unknown key `mrr.fwhm`"), "{e}");
    }
}
