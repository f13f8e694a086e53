use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ufmc_anm::estimator::{self, EstimationResult};
use ufmc_anm::harness::{self, Experiment, Purpose};
use ufmc_anm::waveform::{
    apply_channel_and_noise, chebyshev_window, detection_window, receiver_front_end, sidelobe_attenuation_db,
    ChannelRealization, SymbolFrame,
};
use ufmc_anm::{Config, C64};

use crate::{CliError, Common};

fn load(common: &Common) -> Result<Config, CliError> {
    if !common.config.is_file() {
        return Err(CliError::Usage(format!("config file {} not found", common.config.display())));
    }
    let mut overrides = common.overrides.clone();
    if let Some(seed) = common.seed {
        overrides.push(format!("system.seed={seed}"));
    }
    let mut cfg = Config::load(&common.config, &overrides)?;
    if let Some(out) = &common.out {
        cfg.experiment.output = out.clone();
    }
    Ok(cfg)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn output_dir(cfg: &Config) -> PathBuf {
    cfg.experiment.output.clone()
}

pub fn filter_design(common: &Common) -> Result<(), CliError> {
    let cfg = load(common)?;
    let exp = Experiment::new(&cfg)?;
    let sys = &cfg.system;
    let dir = output_dir(&cfg);
    for f in exp.system.filters() {
        let band = f.subband + 1;
        let mut taps = String::from("index,re,im\n");
        for (l, t) in f.taps.iter().enumerate() {
            writeln!(taps, "{},{},{}", l + 1, t.re, t.im).expect("string write");
        }
        write(&dir.join(format!("taps_subband{band}.csv")), &taps)?;
        let peak = f.freq_response.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut resp = String::from("bin,db\n");
        for (k, v) in f.freq_response.iter().enumerate() {
            writeln!(resp, "{k},{}", 20.0 * (v.norm() / peak).log10()).expect("string write");
        }
        write(&dir.join(format!("response_subband{band}.csv")), &resp)?;
    }
    let proto = chebyshev_window(sys.filter_len, sys.alpha_db)?;
    println!(
        "L = {}, alpha = {} dB: measured side-lobe attenuation {:.2} dB",
        sys.filter_len,
        sys.alpha_db,
        sidelobe_attenuation_db(&proto, 1 << 14)
    );
    Ok(())
}

/// Reads a `index,re,im` CSV with a header row.
fn read_samples(path: &Path, expected: usize) -> Result<Vec<C64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().unwrap_or_default();
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["index", "re", "im"] {
        return Err(CliError::Usage(format!(
            "{}: expected header `index,re,im`, found `{header}`",
            path.display()
        )));
    }
    let mut samples = vec![None; expected];
    for (row, line) in lines.enumerate() {
        let bad = |what: &str| CliError::Usage(format!("{}: data row {}: {what}: `{line}`", path.display(), row + 1));
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(bad("expected 3 fields"));
        }
        let index: usize = fields[0].parse().map_err(|_| bad("bad index"))?;
        let re: f64 = fields[1].parse().map_err(|_| bad("bad real part"))?;
        let im: f64 = fields[2].parse().map_err(|_| bad("bad imaginary part"))?;
        let slot = samples.get_mut(index).ok_or_else(|| bad("index out of range"))?;
        if slot.replace(C64::new(re, im)).is_some() {
            return Err(bad("duplicate index"));
        }
    }
    samples
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| CliError::Usage(format!("{}: sample {i} missing", path.display()))))
        .collect()
}

pub fn estimate(common: &Common) -> Result<(), CliError> {
    let cfg = load(common)?;
    let exp = Experiment::new(&cfg)?;
    let sys = &cfg.system;
    let scenario = &cfg.scenario;

    let (samples, sigma2, truth) = if let Some(path) = scenario.samples_path() {
        let samples = read_samples(path, sys.symbol_len())?;
        (samples, scenario.noise_variance, None)
    } else {
        if scenario.delta_t.len() != sys.subbands || scenario.gains.len() != sys.subbands {
            return Err(CliError::Usage(format!(
                "scenario needs {} offsets and {} gains",
                sys.subbands, sys.subbands
            )));
        }
        let channel = ChannelRealization::new(
            scenario.gains.iter().map(|g| C64::new(g[0], g[1])).collect(),
            scenario.delta_t.clone(),
        )?;
        let sigma2 = if scenario.noiseless { 0.0 } else { exp.noise_variance(scenario.snr_db) };
        let frame = SymbolFrame::pilots_only(exp.pilot.clone(), cfg.experiment.pilot_repetitions, sys.subbands);
        let m = frame.estimation_window();
        let windows: Vec<Vec<C64>> = (0..sys.subbands)
            .map(|i| detection_window(&exp.system, &frame, i, m, channel.delta_t[i]))
            .collect();
        let mut rng = harness::trial_rng(sys.seed, Purpose::PilotNoise, 0, 0);
        let y = apply_channel_and_noise(&windows, &channel, sigma2, &mut rng)?;
        (y, sigma2, Some(channel))
    };
    let received = receiver_front_end(&exp.system, samples, sigma2)?;
    let mut result = estimator::joint_estimate(&received, &exp.pilot_spectrum, sys, &cfg.solver)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    if let Some(ch) = &truth {
        result.associate_with(&ch.delta_t);
    }
    let ta = estimator::timing_advance_decision(&result.associated_delta_t(), scenario.ta_threshold)?;
    let report = render(&result, &ta, truth.as_ref());
    print!("{report}");
    write(&output_dir(&cfg).join("estimate.txt"), &report)
}

fn render(r: &EstimationResult, ta: &[bool], truth: Option<&ChannelRealization>) -> String {
    let mut out = String::new();
    let mut kv = |k: String, v: String| writeln!(out, "{k} = {v}").expect("string write");
    kv("no_signal".into(), r.no_signal.to_string());
    let dt = r.associated_delta_t();
    let h = r.associated_h();
    for i in 0..dt.len() {
        let j = r.association[i];
        kv(format!("user{}.delta_t", i + 1), format!("{:.6}", dt[i]));
        kv(format!("user{}.tau", i + 1), format!("{:.8}", r.taus[j]));
        kv(format!("user{}.h_magnitude", i + 1), format!("{:.6}", h[i].norm()));
        kv(format!("user{}.h_phase_rad", i + 1), format!("{:.6}", h[i].arg()));
        kv(format!("user{}.outside_prior", i + 1), r.outside_prior[j].to_string());
        kv(format!("user{}.timing_advance", i + 1), ta[i].to_string());
        if let Some(ch) = truth {
            kv(format!("user{}.true_delta_t", i + 1), format!("{:.6}", ch.delta_t[i]));
        }
    }
    kv("residual_norm".into(), format!("{:.6e}", r.residual_norm));
    kv("atomic_residual".into(), format!("{:.6e}", r.atomic_residual));
    if let Some(s) = &r.solver {
        kv("solver.lambda".into(), format!("{:.6e}", s.lambda));
        kv("solver.iterations".into(), s.iterations.to_string());
        kv("solver.converged".into(), s.converged.to_string());
        kv("solver.primal_residual".into(), format!("{:.3e}", s.primal_residual));
        kv("solver.dual_residual".into(), format!("{:.3e}", s.dual_residual));
    }
    out
}

pub fn sweep_nmse(common: &Common) -> Result<(), CliError> {
    let cfg = load(common)?;
    let records = harness::run_nmse_sweep(&cfg)?;
    write(&output_dir(&cfg).join("nmse.csv"), &harness::to_csv(&records))
}

pub fn sweep_ber(common: &Common) -> Result<(), CliError> {
    let cfg = load(common)?;
    let records = harness::run_ber_sweep(&cfg)?;
    write(&output_dir(&cfg).join("ber.csv"), &harness::to_csv(&records))
}
