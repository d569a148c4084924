//! C interface to the receiver simulator.
//!
//! Every function returns an [`MwfiStatus`]. On failure the message of the
//! last error on the calling thread is available through
//! [`mwfi_last_error_message`]. Objects are opaque handles created by a
//! `*_new` function and released with the matching `*_free`.

#![allow(clippy::missing_safety_doc, clippy::neg_cmp_op_on_partial_ord)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use mwfi_core::classifier::{classify, compute_features, ClassLabel, FeatureThresholds};
use mwfi_core::ifm::{build_lut, extract_inst_freq, simulate_ifm, AcfLut, ExtractSettings, LutMode, DEFAULT_BAND};
use mwfi_core::photonic::{LinkModels, NotchFilterModel, Port};
use mwfi_core::rf_signals::{ChirpSpec, HopSpec, RfScenario, TimeGrid, ToneSpec};
use mwfi_core::scan::{
    calibrate, default_calibration_tones, detect_pulses, estimate_frequencies, simulate_scan, CalibrationTable,
    PulseDetector, SawtoothDrive, DEFAULT_SCAN_RATE,
};
use mwfi_core::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MwfiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Calibration = 3,
    NoSignal = 4,
    OutsideLut = 5,
    BufferTooSmall = 6,
    Parse = 7,
    Internal = 8,
}

/// Signal class reported by [`mwfi_classify`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MwfiLabel {
    Unknown = 0,
    SingleFrequency = 1,
    MultipleFrequency = 2,
    Chirped = 3,
    FrequencyHopping = 4,
}

impl From<ClassLabel> for MwfiLabel {
    fn from(l: ClassLabel) -> Self {
        match l {
            ClassLabel::Unknown => MwfiLabel::Unknown,
            ClassLabel::SingleFrequency => MwfiLabel::SingleFrequency,
            ClassLabel::MultipleFrequency => MwfiLabel::MultipleFrequency,
            ClassLabel::Chirped => MwfiLabel::Chirped,
            ClassLabel::FrequencyHopping => MwfiLabel::FrequencyHopping,
        }
    }
}

/// Photonic link parameters.
pub struct MwfiModels(LinkModels);
/// Set of RF emitters.
pub struct MwfiScenario(RfScenario);
/// Delay-to-frequency lookup of the scanning path.
pub struct MwfiCalibration(CalibrationTable);
/// Power-to-frequency lookup of the discriminator path.
pub struct MwfiLut(AcfLut);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> MwfiStatus {
    match err {
        Error::Stage { source, .. } => status_of(source),
        Error::InvalidParameter { .. } | Error::ThermalUndersampled { .. } | Error::LengthMismatch { .. } => {
            MwfiStatus::InvalidParameter
        }
        Error::CalibrationTone { .. } | Error::Calibration(_) | Error::NonMonotoneLut { .. } => MwfiStatus::Calibration,
        Error::NoEnvelope | Error::NoSubEnvelopes | Error::NoSignal { .. } => MwfiStatus::NoSignal,
        Error::OutsideLut { .. } => MwfiStatus::OutsideLut,
        Error::Parse(_) => MwfiStatus::Parse,
        Error::Io(_) => MwfiStatus::Internal,
    }
}

struct Failure(MwfiStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(MwfiStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> MwfiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            MwfiStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            MwfiStatus::Internal
        }
    }
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn get_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Copies `values` into `out[..capacity]` and stores the count in
/// `out_len`. The count is stored even when the buffer is too small.
unsafe fn fill(values: &[f64], out: *mut f64, capacity: usize, out_len: *mut usize) -> Result<(), Failure> {
    put(out_len, values.len(), "out_len")?;
    if values.len() > capacity {
        return Err(Failure(
            MwfiStatus::BufferTooSmall,
            format!("{} values do not fit in a buffer of {capacity}", values.len()),
        ));
    }
    if !values.is_empty() {
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    }
    Ok(())
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

fn port(number: u8) -> Result<Port, Failure> {
    Port::from_number(number).ok_or_else(|| Failure(MwfiStatus::InvalidParameter, format!("no MZI port {number}")))
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length, or 0
/// when the last call succeeded.
#[no_mangle]
pub unsafe extern "C" fn mwfi_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Default link models with detector noise.
#[no_mangle]
pub extern "C" fn mwfi_models_new() -> *mut MwfiModels {
    boxed(MwfiModels(LinkModels::default()))
}

#[no_mangle]
pub unsafe extern "C" fn mwfi_models_free(models: *mut MwfiModels) {
    free(models)
}

/// Sets the detector noise (fraction of full scale) and seed.
#[no_mangle]
pub unsafe extern "C" fn mwfi_models_set_noise(models: *mut MwfiModels, sigma: f64, seed: u64) -> MwfiStatus {
    guard(|| {
        let m = get_mut(models, "models")?;
        if !(sigma >= 0.0) {
            return Err(Failure(
                MwfiStatus::InvalidParameter,
                "noise sigma must be non-negative".into(),
            ));
        }
        m.0 = m.0.clone().with_noise(sigma, seed);
        Ok(())
    })
}

/// Enables the band-stop filter at `center_hz`, or disables it when
/// `center_hz` is 0.
#[no_mangle]
pub unsafe extern "C" fn mwfi_models_set_notch(models: *mut MwfiModels, center_hz: f64) -> MwfiStatus {
    guard(|| {
        let m = get_mut(models, "models")?;
        m.0.notch = (center_hz != 0.0).then(|| NotchFilterModel::centered(center_hz));
        m.0.validate()?;
        Ok(())
    })
}

/// Empty scenario.
#[no_mangle]
pub extern "C" fn mwfi_scenario_new() -> *mut MwfiScenario {
    boxed(MwfiScenario(RfScenario::new()))
}

#[no_mangle]
pub unsafe extern "C" fn mwfi_scenario_free(scenario: *mut MwfiScenario) {
    free(scenario)
}

#[no_mangle]
pub unsafe extern "C" fn mwfi_scenario_add_tone(
    scenario: *mut MwfiScenario,
    freq_hz: f64,
    amplitude: f64,
) -> MwfiStatus {
    guard(|| {
        let s = get_mut(scenario, "scenario")?;
        let next = s.0.clone().with_tone(ToneSpec::new(freq_hz, amplitude));
        next.validate()?;
        s.0 = next;
        Ok(())
    })
}

/// Adds a rising linear chirp.
#[no_mangle]
pub unsafe extern "C" fn mwfi_scenario_add_chirp(
    scenario: *mut MwfiScenario,
    center_hz: f64,
    span_hz: f64,
    pulse_width_s: f64,
    repeat_interval_s: f64,
    amplitude: f64,
) -> MwfiStatus {
    guard(|| {
        let s = get_mut(scenario, "scenario")?;
        let chirp = ChirpSpec {
            amplitude,
            ..ChirpSpec::new(center_hz, span_hz, pulse_width_s, repeat_interval_s)
        };
        let next = s.0.clone().with_chirp(chirp);
        next.validate()?;
        s.0 = next;
        Ok(())
    })
}

/// Adds a repeating hop sequence over `freqs_hz[..n_freqs]`.
#[no_mangle]
pub unsafe extern "C" fn mwfi_scenario_add_hop(
    scenario: *mut MwfiScenario,
    freqs_hz: *const f64,
    n_freqs: usize,
    dwell_s: f64,
    amplitude: f64,
) -> MwfiStatus {
    guard(|| {
        let s = get_mut(scenario, "scenario")?;
        if freqs_hz.is_null() {
            return Err(null("freqs_hz"));
        }
        let freqs = std::slice::from_raw_parts(freqs_hz, n_freqs).to_vec();
        let hop = HopSpec {
            amplitude,
            ..HopSpec::new(freqs, dwell_s)
        };
        let next = s.0.clone().with_hop(hop);
        next.validate()?;
        s.0 = next;
        Ok(())
    })
}

/// Calibrates the scanning path with the default drive and 10-20 GHz
/// tones. Detector noise is disabled during calibration.
#[no_mangle]
pub unsafe extern "C" fn mwfi_calibrate(models: *const MwfiModels, out: *mut *mut MwfiCalibration) -> MwfiStatus {
    guard(|| {
        let m = get(models, "models")?;
        let drive = SawtoothDrive::default();
        let grid = drive.grid(DEFAULT_SCAN_RATE)?;
        let table = calibrate(&m.0.clone().noiseless(), &drive, &default_calibration_tones(), &grid)?;
        put(out, boxed(MwfiCalibration(table)), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn mwfi_calibration_free(calibration: *mut MwfiCalibration) {
    free(calibration)
}

/// Writes `a`, `b`, `c` of `f = a t² + b t + c` to `out[0..3]`.
#[no_mangle]
pub unsafe extern "C" fn mwfi_calibration_coefficients(
    calibration: *const MwfiCalibration,
    out: *mut f64,
) -> MwfiStatus {
    guard(|| {
        let c = &get(calibration, "calibration")?.0;
        let mut n = 0;
        fill(&[c.a, c.b, c.c], out, 3, &mut n)
    })
}

/// Frequency at period delay `t_s`.
#[no_mangle]
pub unsafe extern "C" fn mwfi_calibration_eval(
    calibration: *const MwfiCalibration,
    t_s: f64,
    out_hz: *mut f64,
) -> MwfiStatus {
    guard(|| {
        let c = &get(calibration, "calibration")?.0;
        if !c.contains(t_s) {
            return Err(Failure(
                MwfiStatus::OutsideLut,
                format!("delay {t_s:e} s lies outside the calibrated range"),
            ));
        }
        put(out_hz, c.eval(t_s), "out_hz")
    })
}

/// Scans one period and writes the in-band frequency estimates, in delay
/// order, to `out[..capacity]`.
#[no_mangle]
pub unsafe extern "C" fn mwfi_measure_tones(
    models: *const MwfiModels,
    scenario: *const MwfiScenario,
    calibration: *const MwfiCalibration,
    out: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> MwfiStatus {
    guard(|| {
        let (m, s, c) = (
            &get(models, "models")?.0,
            &get(scenario, "scenario")?.0,
            &get(calibration, "calibration")?.0,
        );
        let drive = SawtoothDrive::default();
        let trace = simulate_scan(s, m, &drive, &drive.grid(DEFAULT_SCAN_RATE)?)?;
        let events = detect_pulses(&trace, &PulseDetector::for_scan(m, &drive));
        let freqs: Vec<f64> = estimate_frequencies(&events, c)
            .iter()
            .filter_map(|e| e.freq_hz())
            .collect();
        fill(&freqs, out, capacity, out_len)
    })
}

/// Scans one period and labels the signal type.
#[no_mangle]
pub unsafe extern "C" fn mwfi_classify(
    models: *const MwfiModels,
    scenario: *const MwfiScenario,
    out_label: *mut MwfiLabel,
) -> MwfiStatus {
    guard(|| {
        let (m, s) = (&get(models, "models")?.0, &get(scenario, "scenario")?.0);
        let drive = SawtoothDrive::default();
        let trace = simulate_scan(s, m, &drive, &drive.grid(DEFAULT_SCAN_RATE)?)?;
        let det = PulseDetector::for_scan(m, &drive);
        let events = detect_pulses(&trace, &det);
        let features = compute_features(&events, &trace, &det, &FeatureThresholds::for_scan(m, &drive));
        put(out_label, classify(&features).into(), "out_label")
    })
}

/// Single-port lookup over 10-20 GHz with `n_knots` samples.
#[no_mangle]
pub unsafe extern "C" fn mwfi_lut_new(
    models: *const MwfiModels,
    port_number: u8,
    n_knots: usize,
    out: *mut *mut MwfiLut,
) -> MwfiStatus {
    guard(|| {
        let m = &get(models, "models")?.0;
        let lut = build_lut(
            &m.mzi,
            Some(&m.modulator),
            DEFAULT_BAND,
            LutMode::SinglePort(port(port_number)?),
            n_knots,
        )?;
        put(out, boxed(MwfiLut(lut)), "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn mwfi_lut_free(lut: *mut MwfiLut) {
    free(lut)
}

/// Normalized port level at `freq_hz`.
#[no_mangle]
pub unsafe extern "C" fn mwfi_lut_eval(lut: *const MwfiLut, freq_hz: f64, out_level: *mut f64) -> MwfiStatus {
    guard(|| {
        let l = &get(lut, "lut")?.0;
        let v = l.eval(freq_hz).ok_or_else(|| {
            Failure(
                MwfiStatus::OutsideLut,
                format!("{freq_hz:e} Hz lies outside the lookup band"),
            )
        })?;
        put(out_level, v, "out_level")
    })
}

/// Frequency whose normalized level is `level`.
#[no_mangle]
pub unsafe extern "C" fn mwfi_lut_invert(lut: *const MwfiLut, level: f64, out_hz: *mut f64) -> MwfiStatus {
    guard(|| {
        let l = &get(lut, "lut")?.0;
        let f = l.invert(level).ok_or(Error::OutsideLut { level })?;
        put(out_hz, f, "out_hz")
    })
}

/// Simulates the discriminator port the lookup was built for and writes
/// one frequency per sample to `out[..capacity]`. NOISE samples are NaN.
#[no_mangle]
pub unsafe extern "C" fn mwfi_ifm_extract(
    models: *const MwfiModels,
    scenario: *const MwfiScenario,
    lut: *const MwfiLut,
    sample_rate_hz: f64,
    duration_s: f64,
    out: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> MwfiStatus {
    guard(|| {
        let (m, s, l) = (
            &get(models, "models")?.0,
            &get(scenario, "scenario")?.0,
            &get(lut, "lut")?.0,
        );
        let LutMode::SinglePort(p) = l.mode else {
            return Err(Failure(
                MwfiStatus::InvalidParameter,
                "lookup is not single-port".into(),
            ));
        };
        let grid = TimeGrid::covering(sample_rate_hz, duration_s)?;
        let trace = simulate_ifm(s, m, &grid, p, l.band)?;
        let est = extract_inst_freq(&trace, l, &ExtractSettings::default())?;
        let freqs: Vec<f64> = est.freq.iter().map(|f| f.unwrap_or(f64::NAN)).collect();
        fill(&freqs, out, capacity, out_len)
    })
}
