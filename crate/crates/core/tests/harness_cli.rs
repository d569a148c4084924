use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mwfi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mwfi")).args(args).output().unwrap()
}

fn preset(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run_ok(mode: &str, config: &Path, out: &Path) -> String {
    let o = mwfi(&[
        mode,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn report_value(report: &str, key: &str) -> String {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no `{key}` in report"))
        .to_string()
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_ok("classify", &preset("fig5e.conf"), &a);
    run_ok("classify", &preset("fig5e.conf"), &b);
    for name in ["scan.csv", "events.csv", "features.txt"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    assert!(a.join("report.txt").exists());
}

#[test]
fn seed_flag_changes_noise() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = preset("fig5e.conf");
    let c = cfg.to_str().unwrap();
    for (seed, sub) in [("1", "s1"), ("2", "s2")] {
        let out = dir.path().join(sub);
        let o = mwfi(&[
            "classify",
            "--config",
            c,
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success());
    }
    assert_ne!(
        fs::read(dir.path().join("s1/scan.csv")).unwrap(),
        fs::read(dir.path().join("s2/scan.csv")).unwrap()
    );
}

#[test]
fn invalid_mode_fails_with_one_line_reason() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "mode = bogus\nscenario.tones_hz = 15e9\n").unwrap();
    let o = mwfi(&[
        "measure",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.contains("bogus"), "{err}");

    assert!(!mwfi(&["transmogrify", "--config", cfg.to_str().unwrap()])
        .status
        .success());
}

#[test]
fn unknown_key_is_reported_with_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.conf");
    fs::write(&cfg, "seed = 1\nscenario.tone_hz = 15e9\n").unwrap();
    let o = mwfi(&[
        "measure",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 2") && err.contains("scenario.tone_hz"), "{err}");
}

#[test]
fn noiseless_measure_meets_quantization_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("clean.conf");
    fs::write(
        &cfg,
        "mode = measure\nmeasure.start_hz = 10e9\nmeasure.stop_hz = 20e9\nmeasure.step_hz = 0.5e9\npd.noise_sigma = 0\n",
    )
    .unwrap();
    let report = run_ok("measure", &cfg, &dir.path().join("out"));
    let rms: f64 = report_value(&report, "rms_error_hz").parse().unwrap();
    // one scan-time sample at the steepest point of the 10-20 GHz sweep
    let bound = 2.0 * 2e9 * 6f64.sqrt() * 16.0 / 1e6;
    assert!(rms <= bound, "{rms} > {bound}");
    assert_eq!(report_value(&report, "missed_tones"), "0");

    let csv = fs::read_to_string(dir.path().join("out/measure.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("truth_hz,estimate_hz,error_hz"));
    assert_eq!(csv.lines().count(), 22);
}

#[test]
fn filtered_hop_track_contains_only_the_surviving_frequencies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let report = run_ok("dynamic", &preset("fig6f.conf"), &out);
    assert_eq!(
        report_value(&report, "dynamic_filtered_samples"),
        report_value(&report, "dynamic_filtered_flagged_noise")
    );
    let csv = fs::read_to_string(out.join("inst_freq.csv")).unwrap();
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(lines.next(), Some("time_s,freq_hz_or_NOISE"));
    let mut valid = 0;
    for line in lines {
        let value = line.split(',').nth(1).unwrap();
        if value == "NOISE" {
            continue;
        }
        let t: f64 = line.split(',').next().unwrap().parse().unwrap();
        let f: f64 = value.parse().unwrap();
        // dwell 80 ns, cycle 10, 13, 15, 17 GHz
        let truth = [10e9, 13e9, 15e9, 17e9][((t + 1e-12) / 80e-9) as usize % 4];
        assert_ne!(truth, 10e9, "jammer leaked at {line}");
        // per-sample noise scatter is well under half the hop spacing
        assert!((f - truth).abs() < 1e9, "unexpected {f} in {line}");
        valid += 1;
    }
    assert!(valid > 900);
}

#[test]
fn calibrate_writes_reloadable_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cal");
    run_ok("calibrate", &preset("fig3a.conf"), &out);
    let text = fs::read_to_string(out.join("calibration.txt")).unwrap();
    mwfi_core::scan::CalibrationTable::from_text(&text).unwrap();
    assert!(out.join("lut.csv").exists());
}
