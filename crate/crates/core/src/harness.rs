//! Monte Carlo sweeps over SNR with CSV output.
//!
//! Randomness comes from ChaCha8 generators seeded with `system.seed` and
//! addressed by a 64-bit stream id:
//!
//! ```text
//! stream = purpose << 56 | snr_index << 32 | trial
//! ```
//!
//! Channel draws and data symbols use `snr_index = 0`, so every SNR point
//! sees the same channels and data for a given trial; noise uses the index
//! of the SNR point in `system.snr_db`. Trials are independent, may run in
//! any order, and are aggregated in trial order.

use std::fmt::{self, Write as _};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::estimator::{self, EstimationResult};
use crate::qpsk;
use crate::waveform::{
    apply_channel_and_noise, receiver_front_end, detection_window, ChannelRealization, SymbolFrame, Ufmc,
};
use crate::C64;

/// Reported in place of `10 log10(0)`.
pub const NMSE_FLOOR_DB: f64 = -320.0;

pub const CSV_HEADER: &str = "snr_db,method,metric,value,trials,failures,mean_iterations";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Channel = 1,
    PilotNoise = 2,
    Data = 3,
    DataNoise = 4,
}

/// Generator for one (purpose, SNR point, trial) triple.
pub fn trial_rng(seed: u64, purpose: Purpose, snr_index: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stream = (purpose as u64) << 56 | (snr_index as u64 & 0xff_ffff) << 32 | (trial as u64 & 0xffff_ffff);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Anm,
    Baseline,
    Ideal,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Anm => "anm",
            Method::Baseline => "baseline",
            Method::Ideal => "ideal",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    NmseDb,
    Ber,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::NmseDb => "nmse_db",
            Metric::Ber => "ber",
        })
    }
}

/// One CSV row. `value` is NaN when more than half the trials failed.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub snr_db: f64,
    pub method: Method,
    pub metric: Metric,
    pub value: f64,
    pub trials: usize,
    pub failures: usize,
    pub mean_iterations: f64,
    /// Bits counted (BER rows only).
    pub bits: u64,
}

impl MetricsRecord {
    pub fn is_valid(&self) -> bool {
        !self.value.is_nan()
    }

    /// Standard error of a BER estimate.
    pub fn ber_standard_error(&self) -> f64 {
        if self.bits == 0 {
            return f64::NAN;
        }
        (self.value * (1.0 - self.value) / self.bits as f64).sqrt()
    }
}

pub fn to_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.snr_db, r.method, r.metric, r.value, r.trials, r.failures, r.mean_iterations
        )
        .expect("writing to a String");
    }
    out
}

pub fn write_csv(records: &[MetricsRecord], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    std::fs::write(path, to_csv(records))?;
    Ok(())
}

/// `10 log10(mean(errors))`, with [`NMSE_FLOOR_DB`] for a zero mean.
pub fn compute_nmse(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::InvalidInput("no errors to average".into()));
    }
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    Ok(if mean == 0.0 { NMSE_FLOOR_DB } else { 10.0 * mean.log10() })
}

/// Everything shared by the trials of a sweep.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: Config,
    pub system: Ufmc,
    pub pilot: Vec<C64>,
    /// Clean pilot symbol (time samples).
    pub pilot_symbol: Vec<C64>,
    pub pilot_spectrum: Vec<C64>,
    /// Average transmit sample power `P`.
    pub power: f64,
}

impl Experiment {
    pub fn new(config: &Config) -> Result<Self> {
        config.validate()?;
        let system = Ufmc::new(&config.system)?;
        Self::with_system(config, system)
    }

    /// Uses a prepared system (e.g. with non-default filters).
    pub fn with_system(config: &Config, system: Ufmc) -> Result<Self> {
        config.validate()?;
        let pilot = qpsk::pilot_sequence(config.system.subband_width);
        let pilot_symbol = system.pilot_symbol(&pilot);
        let pilot_spectrum = system.spectrum(&pilot_symbol);
        let power = system.average_transmit_power();
        Ok(Self {
            config: config.clone(),
            system,
            pilot,
            pilot_symbol,
            pilot_spectrum,
            power,
        })
    }

    /// Per-sample noise variance, `P / (2N 10^(snr/10))`.
    pub fn noise_variance(&self, snr_db: f64) -> f64 {
        self.power / (self.config.system.fft_len() as f64 * 10f64.powf(snr_db / 10.0))
    }

    fn draw_channel(&self, trial: usize) -> ChannelRealization {
        let sys = &self.config.system;
        let mut rng = trial_rng(sys.seed, Purpose::Channel, 0, trial);
        ChannelRealization::draw(&mut rng, sys.subbands, sys.filter_len as f64)
    }

    /// Simulated received pilot window and the estimator's output on it.
    pub fn estimate_pilot(
        &self,
        frame: &SymbolFrame,
        channel: &ChannelRealization,
        sigma2: f64,
        rng: &mut ChaCha8Rng,
    ) -> (Vec<C64>, Result<EstimationResult>) {
        let m = frame.estimation_window();
        let windows: Vec<Vec<C64>> = (0..channel.users())
            .map(|i| detection_window(&self.system, frame, i, m, channel.delta_t[i]))
            .collect();
        let y = apply_channel_and_noise(&windows, channel, sigma2, rng).expect("windows match channel");
        let received = receiver_front_end(&self.system, y.clone(), sigma2).expect("window length is T_U");
        let est = estimator::joint_estimate(
            &received,
            &self.pilot_spectrum,
            &self.config.system,
            &self.config.solver,
        );
        (y, est)
    }

    /// Correlation search range: the offset prior `|dt| < L`.
    pub fn baseline_lags(&self) -> std::ops::RangeInclusive<i64> {
        let l = self.config.system.filter_len as i64;
        -l..=l
    }
}

/// Outcome of one NMSE trial.
#[derive(Debug, Clone, PartialEq)]
pub struct NmseTrial {
    pub channel: ChannelRealization,
    /// `(1/B) sum (dt_hat - dt)^2` after association, or the error text.
    pub anm: std::result::Result<AnmTrial, String>,
    /// Same metric for the single-peak baseline.
    pub baseline: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnmTrial {
    pub squared_error: f64,
    /// `sum |h_hat - h|^2` after association.
    pub channel_error: f64,
    pub channel_energy: f64,
    pub iterations: usize,
    pub estimate: EstimationResult,
}

fn nmse_trial(exp: &Experiment, snr_index: usize, sigma2: f64, trial: usize) -> NmseTrial {
    let sys = &exp.config.system;
    let channel = exp.draw_channel(trial);
    let frame = SymbolFrame::pilots_only(exp.pilot.clone(), exp.config.experiment.pilot_repetitions, sys.subbands);
    let mut rng = trial_rng(sys.seed, Purpose::PilotNoise, snr_index, trial);
    let (y, est) = exp.estimate_pilot(&frame, &channel, sigma2, &mut rng);
    let users = channel.users() as f64;
    let anm = est
        .map(|mut e| {
            e.associate_with(&channel.delta_t);
            let dt = e.associated_delta_t();
            let h = e.associated_h();
            AnmTrial {
                squared_error: dt.iter().zip(&channel.delta_t).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / users,
                channel_error: h.iter().zip(&channel.h).map(|(a, b)| (a - b).norm_sqr()).sum(),
                channel_energy: channel.h.iter().map(|h| h.norm_sqr()).sum(),
                iterations: e.solver.as_ref().map_or(0, |s| s.iterations),
                estimate: e,
            }
        })
        .map_err(|e| e.to_string());
    let baseline = exp.config.experiment.baseline.then(|| {
        match estimator::correlation_baseline(&y, &exp.pilot_symbol, exp.baseline_lags(), sys.n) {
            Ok(d) => channel.delta_t.iter().map(|t| (d - t).powi(2)).sum::<f64>() / users,
            Err(_) => f64::NAN,
        }
    });
    NmseTrial { channel, anm, baseline }
}

/// Per-trial outcomes at one SNR point (index into `system.snr_db`).
pub fn run_nmse_trials(exp: &Experiment, snr_index: usize) -> Vec<NmseTrial> {
    let snr = exp.config.system.snr_db[snr_index];
    let sigma2 = exp.noise_variance(snr);
    (0..exp.config.experiment.trials)
        .into_par_iter()
        .map(|trial| nmse_trial(exp, snr_index, sigma2, trial))
        .collect()
}

fn summarise(snr_db: f64, method: Method, metric: Metric, trials: usize, values: &[f64], iterations: f64) -> Result<MetricsRecord> {
    let failures = trials - values.len();
    let value = if 2 * failures > trials || values.is_empty() {
        f64::NAN
    } else {
        match metric {
            Metric::NmseDb => compute_nmse(values)?,
            Metric::Ber => unreachable!("BER rows are summarised by bit counts"),
        }
    };
    Ok(MetricsRecord {
        snr_db,
        method,
        metric,
        value,
        trials,
        failures,
        mean_iterations: iterations,
        bits: 0,
    })
}

/// NMSE of the offset estimates at every SNR point: one `anm` row and,
/// when enabled, one `baseline` row per point.
pub fn run_nmse_sweep(config: &Config) -> Result<Vec<MetricsRecord>> {
    let exp = Experiment::new(config)?;
    nmse_sweep(&exp)
}

pub fn nmse_sweep(exp: &Experiment) -> Result<Vec<MetricsRecord>> {
    let mut records = Vec::new();
    for (index, &snr) in exp.config.system.snr_db.iter().enumerate() {
        let outcomes = run_nmse_trials(exp, index);
        let trials = outcomes.len();
        let mut errors = Vec::with_capacity(trials);
        let mut iterations = 0usize;
        for (trial, o) in outcomes.iter().enumerate() {
            match &o.anm {
                Ok(a) => {
                    errors.push(a.squared_error);
                    iterations += a.iterations;
                }
                Err(e) => log::warn!("SNR {snr} dB trial {trial}: {e}"),
            }
        }
        let mean_iter = if errors.is_empty() { 0.0 } else { iterations as f64 / errors.len() as f64 };
        let anm = summarise(snr, Method::Anm, Metric::NmseDb, trials, &errors, mean_iter)?;
        log::info!("SNR {snr} dB: anm NMSE {:.2} dB ({} failures)", anm.value, anm.failures);
        records.push(anm);
        if exp.config.experiment.baseline {
            let base: Vec<f64> = outcomes
                .iter()
                .filter_map(|o| o.baseline)
                .filter(|v| !v.is_nan())
                .collect();
            let rec = summarise(snr, Method::Baseline, Metric::NmseDb, trials, &base, 0.0)?;
            log::info!("SNR {snr} dB: baseline NMSE {:.2} dB", rec.value);
            records.push(rec);
        }
    }
    Ok(records)
}

/// Bit counts of one BER trial.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BerTrial {
    pub anm_errors: u64,
    pub anm_bits: u64,
    pub anm_failed: bool,
    pub iterations: usize,
    pub ideal_errors: u64,
    pub ideal_bits: u64,
}

/// Data symbols per user per trial so that all trials together carry at
/// least `system.data_symbols`.
pub fn data_symbols_per_trial(config: &Config) -> usize {
    config.system.data_symbols.div_ceil(config.experiment.trials)
}

/// Equalises and slices user `user`'s subcarriers from one window spectrum.
fn decide(exp: &Experiment, spectrum: &[C64], user: usize, delta_t: f64, h: C64) -> Vec<C64> {
    let sys = &exp.config.system;
    let response = &exp.system.filter(user).freq_response;
    let period = sys.fft_len() as f64;
    let k0 = user * sys.subband_width;
    (k0..k0 + sys.subband_width)
        .map(|k| {
            let bin = 2 * k;
            let ramp = C64::from_polar(1.0, std::f64::consts::TAU * bin as f64 * delta_t / period);
            spectrum[bin] * ramp / (h * response[bin])
        })
        .collect()
}

fn ber_trial(exp: &Experiment, snr_index: usize, sigma2: f64, per_trial: usize, trial: usize) -> BerTrial {
    let sys = &exp.config.system;
    let channel = exp.draw_channel(trial);
    let mut data_rng = trial_rng(sys.seed, Purpose::Data, 0, trial);
    let data: Vec<Vec<Vec<C64>>> = (0..sys.subbands)
        .map(|_| (0..per_trial).map(|_| qpsk::random_symbols(&mut data_rng, sys.subband_width)).collect())
        .collect();
    let frame = SymbolFrame::new(exp.pilot.clone(), exp.config.experiment.pilot_repetitions, data)
        .expect("frame dimensions are consistent");
    let mut out = BerTrial::default();

    let mut pilot_rng = trial_rng(sys.seed, Purpose::PilotNoise, snr_index, trial);
    let (_, est) = exp.estimate_pilot(&frame, &channel, sigma2, &mut pilot_rng);
    let est = match est {
        Ok(mut e) => {
            e.associate_with(&channel.delta_t);
            out.iterations = e.solver.as_ref().map_or(0, |s| s.iterations);
            Some(e)
        }
        Err(e) => {
            log::warn!("SNR index {snr_index} trial {trial}: {e}");
            out.anm_failed = true;
            None
        }
    };

    let synced = ChannelRealization::new(channel.h.clone(), vec![0.0; channel.users()]).expect("valid channel");
    let mut noise_rng = trial_rng(sys.seed, Purpose::DataNoise, snr_index, trial);
    for m in frame.pilot_symbols..frame.len() {
        let bits_per_user = (qpsk::BITS_PER_SYMBOL * sys.subband_width) as u64;
        let sent = |user: usize| &frame.data[user][m - frame.pilot_symbols];
        // Both arms see the same noise realisation.
        let mut ideal_noise = noise_rng.clone();
        if let Some(e) = &est {
            let windows: Vec<Vec<C64>> = (0..channel.users())
                .map(|i| detection_window(&exp.system, &frame, i, m, channel.delta_t[i]))
                .collect();
            let y = apply_channel_and_noise(&windows, &channel, sigma2, &mut noise_rng).expect("consistent windows");
            let spectrum = exp.system.spectrum(&y);
            let (dt, h) = (e.associated_delta_t(), e.associated_h());
            for user in 0..channel.users() {
                let z = decide(exp, &spectrum, user, dt[user], h[user]);
                out.anm_errors += qpsk::bit_errors(sent(user), &z) as u64;
                out.anm_bits += bits_per_user;
            }
        }
        if exp.config.experiment.ideal {
            let windows: Vec<Vec<C64>> = (0..channel.users())
                .map(|i| detection_window(&exp.system, &frame, i, m, 0.0))
                .collect();
            let y = apply_channel_and_noise(&windows, &synced, sigma2, &mut ideal_noise).expect("consistent windows");
            let spectrum = exp.system.spectrum(&y);
            for user in 0..channel.users() {
                let z = decide(exp, &spectrum, user, 0.0, channel.h[user]);
                out.ideal_errors += qpsk::bit_errors(sent(user), &z) as u64;
                out.ideal_bits += bits_per_user;
            }
        }
        if est.is_none() {
            noise_rng = ideal_noise;
        }
    }
    out
}

pub fn run_ber_trials(exp: &Experiment, snr_index: usize) -> Vec<BerTrial> {
    let snr = exp.config.system.snr_db[snr_index];
    let sigma2 = exp.noise_variance(snr);
    let per_trial = data_symbols_per_trial(&exp.config);
    (0..exp.config.experiment.trials)
        .into_par_iter()
        .map(|trial| ber_trial(exp, snr_index, sigma2, per_trial, trial))
        .collect()
}

/// BER of the estimated arm (`anm`) and, when enabled, the perfectly
/// synchronised known-channel arm (`ideal`) at every SNR point.
pub fn run_ber_sweep(config: &Config) -> Result<Vec<MetricsRecord>> {
    let exp = Experiment::new(config)?;
    ber_sweep(&exp)
}

pub fn ber_sweep(exp: &Experiment) -> Result<Vec<MetricsRecord>> {
    let mut records = Vec::new();
    for (index, &snr) in exp.config.system.snr_db.iter().enumerate() {
        let outcomes = run_ber_trials(exp, index);
        let trials = outcomes.len();
        let failures = outcomes.iter().filter(|o| o.anm_failed).count();
        let ok = trials - failures;
        let (errors, bits) = outcomes
            .iter()
            .fold((0u64, 0u64), |(e, b), o| (e + o.anm_errors, b + o.anm_bits));
        let iterations: usize = outcomes.iter().map(|o| o.iterations).sum();
        let anm = MetricsRecord {
            snr_db: snr,
            method: Method::Anm,
            metric: Metric::Ber,
            value: if 2 * failures > trials || bits == 0 { f64::NAN } else { errors as f64 / bits as f64 },
            trials,
            failures,
            mean_iterations: if ok == 0 { 0.0 } else { iterations as f64 / ok as f64 },
            bits,
        };
        log::info!("SNR {snr} dB: anm BER {:.3e} ({failures} failures)", anm.value);
        records.push(anm);
        if exp.config.experiment.ideal {
            let (errors, bits) = outcomes
                .iter()
                .fold((0u64, 0u64), |(e, b), o| (e + o.ideal_errors, b + o.ideal_bits));
            let rec = MetricsRecord {
                snr_db: snr,
                method: Method::Ideal,
                metric: Metric::Ber,
                value: errors as f64 / bits as f64,
                trials,
                failures: 0,
                mean_iterations: 0.0,
                bits,
            };
            log::info!("SNR {snr} dB: ideal BER {:.3e}", rec.value);
            records.push(rec);
        }
    }
    Ok(records)
}

/// Bit error probability of the ideal arm over `CN(0,1)` flat fading,
/// averaged over the occupied subcarriers of all users:
/// `1/2 (1 - sqrt(a/2 / (1 + a/2)))` with `a = N^2 |F(2k)|^2 / (T_U sigma^2)`.
pub fn ideal_ber_reference(exp: &Experiment, snr_db: f64) -> f64 {
    let sys = &exp.config.system;
    let sigma2 = exp.noise_variance(snr_db);
    let mut total = 0.0;
    let mut count = 0usize;
    for user in 0..sys.subbands {
        let response = &exp.system.filter(user).freq_response;
        for k in user * sys.subband_width..(user + 1) * sys.subband_width {
            let a = (sys.n * sys.n) as f64 * response[2 * k].norm_sqr() / (sys.symbol_len() as f64 * sigma2);
            total += 0.5 * (1.0 - (0.5 * a / (1.0 + 0.5 * a)).sqrt());
            count += 1;
        }
    }
    total / count as f64
}
