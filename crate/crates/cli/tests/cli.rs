use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ufmc-anm"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

/// Cheap sweeps: two SNR points, a handful of trials, few solver iterations.
const SMALL: &str = "
[system]
snr_db = [0.0, 20.0]
data_symbols = 40

[solver]
max_iter = 30

[experiment]
trials = 4
";

#[test]
fn missing_config_is_a_usage_error() {
    let out = run(&["filter-design", "--config", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not found"));
}

#[test]
fn unknown_override_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    let out = run(&["filter-design", "--config", &cfg, "--set", "system.bogus=1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["filter-design", "--config", &cfg, "--set", "no-equals-sign"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_file_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "[solver]\nmax_iterations = 5\n");
    let out = run(&["filter-design", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn help_lists_every_config_key() {
    let out = run(&["sweep-nmse", "--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for (key, default, _) in ufmc_anm::config::CONFIG_KEYS {
        assert!(text.contains(key), "{key} missing from help");
        assert!(text.contains(default), "default {default} of {key} missing from help");
    }
}

#[test]
fn filter_design_writes_taps_and_response() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    let out_dir = dir.path().join("out");
    let out = run(&["filter-design", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for b in 1..=2 {
        let taps = fs::read_to_string(out_dir.join(format!("taps_subband{b}.csv"))).unwrap();
        let mut lines = taps.lines();
        assert_eq!(lines.next(), Some("index,re,im"));
        assert_eq!(lines.count(), 6);
        let response = fs::read_to_string(out_dir.join(format!("response_subband{b}.csv"))).unwrap();
        assert_eq!(response.lines().next(), Some("bin,db"));
        assert_eq!(response.lines().count(), 129);
    }
}

#[test]
fn single_tap_filter_is_a_unit_impulse() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    let out_dir = dir.path().join("out");
    let out = run(&[
        "filter-design",
        "--config",
        &cfg,
        "--out",
        out_dir.to_str().unwrap(),
        "--set",
        "system.filter_len=1",
    ]);
    assert!(out.status.success());
    let taps = fs::read_to_string(out_dir.join("taps_subband1.csv")).unwrap();
    assert_eq!(taps.lines().collect::<Vec<_>>(), ["index,re,im", "1,1,0"]);
}

#[test]
fn invalid_filter_parameters_fail() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "[system]\nfilter_len = 0\n");
    let out = run(&["filter-design", "--config", &cfg]);
    assert_ne!(out.status.code(), Some(0));
    assert!(!out.stderr.is_empty());
}

#[test]
fn nmse_sweep_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SMALL);
    let mut files = Vec::new();
    for run_id in ["a", "b"] {
        let out_dir = dir.path().join(run_id);
        let out = run(&["sweep-nmse", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--seed", "9"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        files.push(fs::read(out_dir.join("nmse.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let text = String::from_utf8(files[0].clone()).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "snr_db,method,metric,value,trials,failures,mean_iterations");
    assert_eq!(lines.len(), 5);

    let other = dir.path().join("c");
    let out = run(&["sweep-nmse", "--config", &cfg, "--out", other.to_str().unwrap(), "--seed", "10"]);
    assert!(out.status.success());
    assert_ne!(fs::read(other.join("nmse.csv")).unwrap(), files[0]);
}

#[test]
fn ber_sweep_has_both_arms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SMALL);
    let out_dir = dir.path().join("out");
    let out = run(&["sweep-ber", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(out_dir.join("ber.csv")).unwrap();
    let methods: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(methods, ["anm", "ideal", "anm", "ideal"]);
}

#[test]
fn malformed_sample_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("samples.csv");
    fs::write(&samples, "index,re,im\n0,1.0,zero\n").unwrap();
    let cfg = config(dir.path(), &format!("[scenario]\nsamples_file = {:?}\n", samples.to_str().unwrap()));
    let out = run(&["estimate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("samples.csv"));

    fs::write(&samples, "0,1.0,0.0\n").unwrap();
    let out = run(&["estimate", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_signal_completes_with_flag() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("zeros.csv");
    let mut body = String::from("index,re,im\n");
    for n in 0..69 {
        body.push_str(&format!("{n},0,0\n"));
    }
    fs::write(&samples, body).unwrap();
    let cfg = config(dir.path(), &format!("[scenario]\nsamples_file = {:?}\n", samples.to_str().unwrap()));
    let out_dir = dir.path().join("out");
    let out = run(&["estimate", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("no_signal = true"));
    let written = fs::read_to_string(out_dir.join("estimate.txt")).unwrap();
    assert_eq!(written, String::from_utf8_lossy(&out.stdout));
}

#[test]
fn synthetic_estimate_reports_both_users() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    let out_dir = dir.path().join("out");
    let out = run(&["estimate", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = String::from_utf8_lossy(&out.stdout).into_owned();
    let value = |key: &str| -> f64 {
        report
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{key} = ")))
            .unwrap_or_else(|| panic!("{key} missing"))
            .parse()
            .unwrap()
    };
    assert!((value("user1.delta_t") - 2.0).abs() <= 0.1, "{report}");
    assert!((value("user2.delta_t") + 1.5).abs() <= 0.1, "{report}");
    assert!(value("solver.iterations") > 0.0);
}
