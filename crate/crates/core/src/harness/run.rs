use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::classifier::{classify, compute_features, ClassLabel, FeatureThresholds};
use crate::error::{Error, Result};
use crate::ifm::{
    build_lut, estimate_static_frequency, extract_inst_freq, extract_inst_freq_ratio, simulate_ifm, AcfLut,
    ExtractSettings, IfmTrace, InstFreqEstimate, LutMode,
};
use crate::photonic::{LinkModels, Port};
use crate::rf_signals::{RfScenario, TimeGrid};
use crate::scan::{
    calibrate, detect_pulses, estimate_frequencies, estimate_hop_set, measure_span, CalibrationTable, PulseDetector,
    PulseEvent, SawtoothDrive, ScanTrace, SpanRule,
};

use super::report::{DynamicMetrics, MetricsReport, ToneResult};
use super::{IfmLutMode, Mode, Pipeline, RunConfig};

/// A named output file held in memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// Report plus artifacts of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: MetricsReport,
    pub artifacts: Vec<Artifact>,
}

fn artifact(name: &str, write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<Artifact> {
    let mut bytes = Vec::new();
    write(&mut bytes).map_err(|e| Error::Io(format!("{name}: {e}")))?;
    Ok(Artifact {
        name: name.to_string(),
        bytes,
    })
}

/// Runs `mode` and writes its artifacts plus `report.txt` into `out_dir`.
pub fn run(config: &RunConfig, mode: Mode, out_dir: &Path) -> Result<MetricsReport> {
    let outcome = run_single(config, mode)?;
    write_outcome(&outcome, out_dir)?;
    Ok(outcome.report)
}

fn write_outcome(outcome: &Outcome, out_dir: &Path) -> Result<()> {
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", out_dir.display()));
    std::fs::create_dir_all(out_dir).map_err(io)?;
    for a in &outcome.artifacts {
        if let Some(parent) = Path::new(&a.name).parent() {
            std::fs::create_dir_all(out_dir.join(parent)).map_err(io)?;
        }
        std::fs::write(out_dir.join(&a.name), &a.bytes).map_err(io)?;
    }
    let mut f = std::fs::File::create(out_dir.join("report.txt")).map_err(io)?;
    write!(f, "{}", outcome.report).map_err(io)
}

/// Runs `mode` without touching the file system.
pub fn run_single(config: &RunConfig, mode: Mode) -> Result<Outcome> {
    let start = Instant::now();
    let mut outcome = match mode {
        Mode::Calibrate => run_calibrate(config),
        Mode::Measure => run_measure(config),
        Mode::Classify => run_classify(config),
        Mode::Dynamic => run_dynamic(config),
        Mode::Sweep => run_sweep(config),
    }?;
    outcome.report.runtime_s = start.elapsed().as_secs_f64();
    Ok(outcome)
}

fn detector(config: &RunConfig) -> PulseDetector {
    let mut d = PulseDetector::for_scan(&config.models, &config.drive);
    if let Some(q) = config.detection.noise_floor_quantile {
        d.noise_floor_quantile = q;
    }
    if let Some(p) = config.detection.min_prominence {
        d.min_prominence = p;
    }
    d
}

fn thresholds(config: &RunConfig) -> FeatureThresholds {
    let mut t = FeatureThresholds::for_scan(&config.models, &config.drive);
    if let Some(f) = config.detection.fill_threshold {
        t.fill_threshold = f;
    }
    if let Some(g) = config.detection.gap_threshold_s {
        t.gap_threshold_s = g;
    }
    t
}

fn span_rule(config: &RunConfig) -> SpanRule {
    let mut r = SpanRule::default();
    if let Some(q) = config.detection.noise_floor_quantile {
        r.noise_floor_quantile = q;
    }
    if let Some(f) = config.detection.span_threshold_fraction {
        r.threshold_fraction = f;
    }
    r
}

fn calibration_table(config: &RunConfig) -> Result<CalibrationTable> {
    if let Some(path) = &config.calibration_file {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        return CalibrationTable::from_text(&text).map_err(|e| e.at("calibration"));
    }
    let models = if config.calibration_noiseless {
        config.models.clone().noiseless()
    } else {
        config.models.clone()
    };
    let drive = SawtoothDrive {
        n_periods: 1,
        ..config.drive
    };
    let grid = drive.grid(config.scan_rate_hz).map_err(|e| e.at("calibration"))?;
    calibrate(&models, &drive, &config.calibration_tones_hz, &grid).map_err(|e| e.at("calibration"))
}

fn lut(config: &RunConfig) -> Result<AcfLut> {
    let s = &config.ifm;
    let (mode, modulator) = match s.lut_mode {
        IfmLutMode::SinglePort => (LutMode::SinglePort(s.port), Some(&config.models.modulator)),
        IfmLutMode::Ratio => (LutMode::Ratio, None),
    };
    build_lut(&config.models.mzi, modulator, s.band_hz, mode, s.n_knots).map_err(|e| e.at("lookup table"))
}

fn extract_settings(config: &RunConfig) -> ExtractSettings {
    ExtractSettings {
        noise_floor: config.ifm.noise_floor,
        upper_limit_hz: config.ifm.upper_limit_hz,
    }
}

/// Distinct seed for the `i`-th independent simulation of a run.
fn sub_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_mul(1_000_003).wrapping_add(i as u64)
}

fn scan(config: &RunConfig, scenario: &RfScenario, models: &LinkModels) -> Result<ScanTrace> {
    let grid = config.drive.grid(config.scan_rate_hz).map_err(|e| e.at("scan"))?;
    crate::scan::simulate_scan(scenario, models, &config.drive, &grid).map_err(|e| e.at("scan"))
}

fn run_calibrate(config: &RunConfig) -> Result<Outcome> {
    let table = calibration_table(config)?;
    let lut = lut(config)?;
    let mut report = MetricsReport::new(Mode::Calibrate, config.seed);
    report.calibration_residual_rms_hz = Some(table.fit_residual_rms);
    Ok(Outcome {
        report,
        artifacts: vec![
            artifact("calibration.txt", |w| w.write_all(table.to_text().as_bytes()))?,
            artifact("lut.csv", |w| lut.write_csv(w))?,
        ],
    })
}

fn measure_csv(tones: &[ToneResult]) -> Result<Artifact> {
    artifact("measure.csv", |w| {
        writeln!(w, "truth_hz,estimate_hz,error_hz")?;
        for t in tones {
            match t.estimate_hz {
                Some(e) => writeln!(w, "{:e},{:e},{:e}", t.truth_hz, e, e - t.truth_hz)?,
                None => writeln!(w, "{:e},NONE,NONE", t.truth_hz)?,
            }
        }
        Ok(())
    })
}

fn events_csv(events: &[PulseEvent], table: &CalibrationTable) -> Result<Artifact> {
    let estimates = estimate_frequencies(events, table);
    artifact("events.csv", |w| {
        writeln!(
            w,
            "period,peak_time_s,peak_power,width_s,fill_randomness,envelope_center_s,freq_hz_or_OUT_OF_BAND"
        )?;
        for (e, est) in events.iter().zip(&estimates) {
            write!(
                w,
                "{},{:e},{:e},{:e},{:e},{:e},",
                e.period_index, e.peak_time, e.peak_power, e.width, e.fill_randomness, e.envelope_center
            )?;
            match est.freq_hz() {
                Some(f) => writeln!(w, "{f:e}")?,
                None => writeln!(w, "OUT_OF_BAND")?,
            }
        }
        Ok(())
    })
}

/// Strongest in-band event of each period, averaged over periods.
fn strongest_estimate(events: &[PulseEvent], table: &CalibrationTable) -> Option<f64> {
    let mut best: std::collections::BTreeMap<usize, &PulseEvent> = Default::default();
    for e in events.iter().filter(|e| table.contains(e.peak_time)) {
        let slot = best.entry(e.period_index).or_insert(e);
        if e.peak_power > slot.peak_power {
            *slot = e;
        }
    }
    if best.is_empty() {
        return None;
    }
    Some(best.values().map(|e| table.eval(e.peak_time)).sum::<f64>() / best.len() as f64)
}

/// Estimates merged across periods when closer than `resolution`.
fn merged_estimates(events: &[PulseEvent], table: &CalibrationTable, resolution: f64) -> Vec<f64> {
    let mut f: Vec<f64> = estimate_frequencies(events, table)
        .iter()
        .filter_map(|e| e.freq_hz())
        .collect();
    f.sort_by(f64::total_cmp);
    let mut out: Vec<Vec<f64>> = Vec::new();
    for x in f {
        match out.last_mut() {
            Some(c) if x - c[c.len() - 1] < resolution => c.push(x),
            _ => out.push(vec![x]),
        }
    }
    out.iter().map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
}

/// Pairs each truth with a distinct estimate, closest pairs first.
fn match_nearest(truths: &[f64], estimates: &[f64]) -> Vec<ToneResult> {
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, t) in truths.iter().enumerate() {
        for (j, e) in estimates.iter().enumerate() {
            pairs.push(((e - t).abs(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut assigned: Vec<Option<f64>> = vec![None; truths.len()];
    let mut used = vec![false; estimates.len()];
    for (_, i, j) in pairs {
        if assigned[i].is_none() && !used[j] {
            assigned[i] = Some(estimates[j]);
            used[j] = true;
        }
    }
    truths
        .iter()
        .zip(assigned)
        .map(|(&truth_hz, estimate_hz)| ToneResult { truth_hz, estimate_hz })
        .collect()
}

fn run_measure(config: &RunConfig) -> Result<Outcome> {
    let mut report = MetricsReport::new(Mode::Measure, config.seed);
    let mut artifacts = Vec::new();
    match config.pipeline {
        Pipeline::Fttm => {
            let table = calibration_table(config)?;
            report.calibration_residual_rms_hz = Some(table.fit_residual_rms);
            let det = detector(config);
            if let Some(tones) = &config.measure_tones_hz {
                report.per_tone = tones
                    .par_iter()
                    .enumerate()
                    .map(|(i, &f)| {
                        let models = config
                            .models
                            .clone()
                            .with_noise(config.models.pd.noise_sigma, sub_seed(config.seed, i));
                        let trace = scan(config, &RfScenario::tone(f), &models)?;
                        Ok(ToneResult {
                            truth_hz: f,
                            estimate_hz: strongest_estimate(&detect_pulses(&trace, &det), &table),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
            } else {
                let trace = scan(config, &config.scenario, &config.models)?;
                let events = detect_pulses(&trace, &det);
                let estimates = merged_estimates(&events, &table, det.resolution_hz);
                let truths: Vec<f64> = config.scenario.tones.iter().map(|t| t.freq_hz).collect();
                report.per_tone = match_nearest(&truths, &estimates);
                artifacts.push(artifact("scan.csv", |w| trace.write_csv(w))?);
                artifacts.push(events_csv(&events, &table)?);
            }
            artifacts.push(artifact("calibration.txt", |w| {
                w.write_all(table.to_text().as_bytes())
            })?);
        }
        Pipeline::Ftpm => {
            let lut = lut(config)?;
            let tones: Vec<f64> = match &config.measure_tones_hz {
                Some(t) => t.clone(),
                None if config.scenario.tones.len() == 1
                    && config.scenario.chirps.is_empty()
                    && config.scenario.hops.is_empty() =>
                {
                    vec![config.scenario.tones[0].freq_hz]
                }
                None => {
                    return Err(Error::invalid(
                        "measure.pipeline",
                        "ftpm measures one static tone at a time; give measure.tones_hz or a single-tone scenario",
                    ))
                }
            };
            let settings = extract_settings(config);
            report.per_tone = tones
                .par_iter()
                .enumerate()
                .map(|(i, &f)| {
                    let models = config
                        .models
                        .clone()
                        .with_noise(config.models.pd.noise_sigma, sub_seed(config.seed, i));
                    let estimate_hz = static_ftpm(config, &RfScenario::tone(f), &models, &lut, &settings)?;
                    Ok(ToneResult {
                        truth_hz: f,
                        estimate_hz,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            artifacts.push(artifact("lut.csv", |w| lut.write_csv(w))?);
        }
    }
    report.compute_rms()?;
    artifacts.insert(0, measure_csv(&report.per_tone)?);
    Ok(Outcome { report, artifacts })
}

fn ifm_grid(config: &RunConfig) -> Result<TimeGrid> {
    TimeGrid::covering(config.ifm.sample_rate_hz, config.ifm.duration_s).map_err(|e| e.at("discriminator"))
}

fn static_ftpm(
    config: &RunConfig,
    scenario: &RfScenario,
    models: &LinkModels,
    lut: &AcfLut,
    settings: &ExtractSettings,
) -> Result<Option<f64>> {
    let grid = ifm_grid(config)?;
    let band = config.ifm.band_hz;
    let sim = |port| simulate_ifm(scenario, models, &grid, port, band).map_err(|e| e.at("discriminator"));
    let estimate = match lut.mode {
        LutMode::SinglePort(port) => estimate_static_frequency(&sim(port)?, lut, settings),
        LutMode::Ratio => {
            let (p1, p2) = (sim(Port::One)?, sim(Port::Two)?);
            let mean = |t: &IfmTrace| t.power.iter().sum::<f64>() / t.power.len() as f64;
            let (m1, m2) = (mean(&p1), mean(&p2));
            let level = (m1 / p1.normalization).max(m2 / p2.normalization);
            if level < settings.noise_floor || m2 <= 0.0 || m1 <= 0.0 {
                Err(Error::NoSignal {
                    level,
                    floor: settings.noise_floor,
                })
            } else {
                lut.invert(10.0 * (m1 / m2).log10()).ok_or(Error::OutsideLut { level })
            }
        }
    };
    match estimate {
        Ok(f) => Ok(Some(f)),
        Err(Error::NoSignal { .. } | Error::OutsideLut { .. }) => Ok(None),
        Err(e) => Err(e.at("inversion")),
    }
}

fn run_classify(config: &RunConfig) -> Result<Outcome> {
    let mut report = MetricsReport::new(Mode::Classify, config.seed);
    report.expected_label = config.expected_label;
    let table = calibration_table(config)?;
    report.calibration_residual_rms_hz = Some(table.fit_residual_rms);
    let det = detector(config);
    let trace = scan(config, &config.scenario, &config.models)?;
    let events = detect_pulses(&trace, &det);
    let features = compute_features(&events, &trace, &det, &thresholds(config));
    let label = classify(&features);
    report.labels.push(label);

    match label {
        ClassLabel::SingleFrequency | ClassLabel::MultipleFrequency => {
            let truths: Vec<f64> = config.scenario.tones.iter().map(|t| t.freq_hz).collect();
            report.per_tone = match_nearest(&truths, &merged_estimates(&events, &table, det.resolution_hz));
            report.compute_rms()?;
        }
        ClassLabel::Chirped => {
            let span = measure_span(&trace, &table, &span_rule(config)).map_err(|e| e.at("span"))?;
            report.span_hz = Some(span);
            if let Some(c) = config.scenario.chirps.first() {
                report.span_truth_hz = Some(c.span_hz);
                report.span_error = Some(span / c.span_hz - 1.0);
            }
        }
        ClassLabel::FrequencyHopping => {
            report.hop_set_hz = estimate_hop_set(&trace, &table, &det).map_err(|e| e.at("hop set"))?;
            if let Some(h) = config.scenario.hops.first() {
                let mut truth = h.freqs_hz.clone();
                truth.sort_by(f64::total_cmp);
                truth.dedup();
                report.hop_truth_hz = truth;
            }
        }
        ClassLabel::Unknown => {}
    }

    let features_text = format!(
        "n_envelopes = {}\nfilled = {}\ncontinuous = {}\nmax_fill_randomness = {:e}\nlongest_gap_s = {:e}\nlabel = {}\n",
        features.n_envelopes,
        features.filled,
        features.continuous,
        features.max_fill_randomness,
        features.longest_gap_s,
        label
    );
    Ok(Outcome {
        report,
        artifacts: vec![
            artifact("scan.csv", |w| trace.write_csv(w))?,
            events_csv(&events, &table)?,
            artifact("features.txt", |w| w.write_all(features_text.as_bytes()))?,
        ],
    })
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Compares a reconstructed track with the scenario's true instantaneous
/// frequency.
pub(crate) fn dynamic_metrics(
    est: &InstFreqEstimate,
    scenario: &RfScenario,
    models: &LinkModels,
    band: [f64; 2],
) -> DynamicMetrics {
    let mut m = DynamicMetrics {
        n_samples: est.freq.len(),
        valid_fraction: est.valid_fraction(),
        ..Default::default()
    };
    let mut sq = Vec::new();
    let mut max_abs: Option<f64> = None;
    let track_dwells = !scenario.hops.is_empty() && scenario.chirps.is_empty();
    let mut dwell: Option<(f64, Vec<f64>)> = None;

    for (t, f) in est.times.iter().zip(&est.freq) {
        let snap = scenario.instantaneous_components(*t);
        let truth = (snap.len() == 1).then(|| snap.components[0].freq_hz);
        if let Some(tf) = truth {
            let in_band = tf >= band[0] && tf <= band[1] && tf <= est.upper_limit_hz;
            if in_band && models.notch_response(tf) < 0.5 {
                m.n_filtered += 1;
                if f.is_none() {
                    m.n_filtered_flagged_noise += 1;
                }
            } else if in_band {
                m.n_in_band += 1;
                match f {
                    Some(f) => {
                        let e = f - tf;
                        sq.push(e * e);
                        max_abs = Some(max_abs.map_or(e.abs(), |x: f64| x.max(e.abs())));
                    }
                    None => m.n_in_band_missed += 1,
                }
            }
        }
        if track_dwells {
            let same = matches!((&dwell, truth), (Some((d, _)), Some(tf)) if *d == tf);
            if !same {
                if let Some((d, mut v)) = dwell.take() {
                    m.dwell_truths_hz.push(d);
                    m.dwell_medians_hz.push(median(&mut v));
                }
                dwell = truth.map(|tf| (tf, Vec::new()));
            }
            if let (Some((_, v)), Some(f)) = (dwell.as_mut(), f) {
                v.push(*f);
            }
        }
    }
    if let Some((d, mut v)) = dwell.take() {
        m.dwell_truths_hz.push(d);
        m.dwell_medians_hz.push(median(&mut v));
    }
    if !sq.is_empty() {
        m.in_band_rms_error_hz = Some((sq.iter().sum::<f64>() / sq.len() as f64).sqrt());
    }
    m.max_abs_error_hz = max_abs;
    m
}

fn run_dynamic(config: &RunConfig) -> Result<Outcome> {
    let lut = lut(config)?;
    let grid = ifm_grid(config)?;
    let settings = extract_settings(config);
    let band = config.ifm.band_hz;
    let sim =
        |port| simulate_ifm(&config.scenario, &config.models, &grid, port, band).map_err(|e| e.at("discriminator"));

    let mut artifacts = Vec::new();
    let est = match lut.mode {
        LutMode::SinglePort(port) => {
            let trace = sim(port)?;
            artifacts.push(artifact("ifm_trace.csv", |w| trace.write_csv(w))?);
            extract_inst_freq(&trace, &lut, &settings)
        }
        LutMode::Ratio => {
            let (p1, p2) = (sim(Port::One)?, sim(Port::Two)?);
            artifacts.push(artifact("ifm_trace.csv", |w| p2.write_csv(w))?);
            artifacts.push(artifact("ifm_trace_port1.csv", |w| p1.write_csv(w))?);
            extract_inst_freq_ratio(&p1, &p2, &lut, &settings)
        }
    }
    .map_err(|e| e.at("inversion"))?;
    artifacts.push(artifact("inst_freq.csv", |w| est.write_csv(w))?);
    artifacts.push(artifact("lut.csv", |w| lut.write_csv(w))?);

    let mut report = MetricsReport::new(Mode::Dynamic, config.seed);
    report.dynamic = Some(dynamic_metrics(&est, &config.scenario, &config.models, band));
    Ok(Outcome { report, artifacts })
}

fn run_sweep(config: &RunConfig) -> Result<Outcome> {
    if config.sweep_seeds == 0 {
        return Err(Error::invalid("sweep.n_seeds", "must be at least 1"));
    }
    let seeds: Vec<u64> = (0..config.sweep_seeds as u64)
        .map(|i| config.seed.wrapping_add(i))
        .collect();
    let runs = seeds
        .par_iter()
        .map(|&s| run_single(&config.clone().with_seed(s), config.sweep_mode))
        .collect::<Result<Vec<_>>>()?;

    let mut report = MetricsReport::new(Mode::Sweep, config.seed);
    report.seeds = seeds.clone();
    report.expected_label = config.expected_label;
    let mut span_errors = Vec::new();
    let mut rows = String::from("seed,rms_error_hz,span_error,hop_max_error_hz,label,dynamic_rms_error_hz\n");
    let mut artifacts = Vec::new();
    let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| format!("{x:e}"));

    for (seed, run) in seeds.iter().zip(runs) {
        let r = &run.report;
        report.per_tone.extend(r.per_tone.iter().copied());
        report.labels.extend(r.labels.iter().copied());
        if let Some(e) = r.span_error {
            span_errors.push(e);
        }
        rows.push_str(&format!(
            "{seed},{},{},{},{},{}\n",
            opt(r.rms_error_hz),
            opt(r.span_error),
            opt(r.hop_max_error_hz()),
            r.labels.first().map_or("none".to_string(), |l| l.to_string()),
            opt(r.dynamic.as_ref().and_then(|d| d.in_band_rms_error_hz)),
        ));
        for a in run.artifacts {
            artifacts.push(Artifact {
                name: format!("seed_{seed}/{}", a.name),
                bytes: a.bytes,
            });
        }
        artifacts.push(Artifact {
            name: format!("seed_{seed}/report.txt"),
            bytes: r.to_string().into_bytes(),
        });
    }
    report.span_error = span_errors.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs()));
    report.compute_rms()?;
    artifacts.insert(
        0,
        Artifact {
            name: "sweep.csv".into(),
            bytes: rows.into_bytes(),
        },
    );
    Ok(Outcome { report, artifacts })
}
