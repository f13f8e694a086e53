//! Scenario, solver and experiment parameters, plus the TOML config file.
//!
//! The file has four tables: `[system]` (with the nested `[system.lambda]`),
//! `[solver]`, `[experiment]` and `[scenario]`. Every key is optional and
//! falls back to [`Config::default`]; unknown keys are rejected. Dotted
//! overrides (`solver.max_iter=300`) are applied on top of the file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weight placed on the data-fidelity term when none can be derived from
/// the noise level (noiseless runs).
pub const DEFAULT_NOISELESS_LAMBDA: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Subcarrier count; the receiver FFT has `2 * n` points.
    pub n: usize,
    /// Number of sub-bands, one per user.
    pub subbands: usize,
    /// Subcarriers per sub-band.
    pub subband_width: usize,
    /// Sub-band FIR length in samples.
    pub filter_len: usize,
    /// Side-lobe attenuation of the Dolph-Chebyshev prototype.
    pub alpha_db: f64,
    /// Data symbols per BER point (summed over all trials).
    pub data_symbols: usize,
    pub snr_db: Vec<f64>,
    pub seed: u64,
    pub lambda: LambdaRule,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            n: 64,
            subbands: 2,
            subband_width: 16,
            filter_len: 6,
            alpha_db: 120.0,
            data_symbols: 10_000,
            snr_db: vec![0.0, 5.0, 10.0, 15.0, 20.0],
            seed: 1,
            lambda: LambdaRule::default(),
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if self.subbands == 0 || self.subband_width == 0 || self.filter_len == 0 {
            return bad("subbands, subband_width and filter_len must be at least 1".into());
        }
        if self.data_symbols == 0 {
            return bad("data_symbols must be at least 1".into());
        }
        if self.n < self.subband_width * self.subbands {
            return bad(format!(
                "n = {} cannot hold {} sub-bands of {} subcarriers",
                self.n, self.subbands, self.subband_width
            ));
        }
        if self.filter_len > self.n + 2 {
            return bad(format!(
                "filter_len = {} leaves no room for zero padding to {} points",
                self.filter_len,
                2 * self.n
            ));
        }
        if self.alpha_db.is_nan() || self.alpha_db <= 0.0 {
            return bad(format!("alpha_db must be positive, got {}", self.alpha_db));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return bad("snr_db entries must be finite".into());
        }
        self.lambda.validate()
    }

    /// UFMC symbol length `N + L - 1` in samples.
    pub fn symbol_len(&self) -> usize {
        self.n + self.filter_len - 1
    }

    /// Receiver FFT size `2N`.
    pub fn fft_len(&self) -> usize {
        2 * self.n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LambdaKind {
    /// `sigma * sqrt(2N ln 2N)` on the data-fidelity term.
    NoiseScaled,
    /// A fixed value.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaRule {
    pub rule: LambdaKind,
    /// Used when `rule = "fixed"`.
    pub value: f64,
    /// Used by the noise-scaled rule when the noise level is zero.
    pub noiseless_fallback: f64,
}

impl Default for LambdaRule {
    fn default() -> Self {
        Self {
            rule: LambdaKind::NoiseScaled,
            value: DEFAULT_NOISELESS_LAMBDA,
            noiseless_fallback: DEFAULT_NOISELESS_LAMBDA,
        }
    }
}

impl LambdaRule {
    pub fn fixed(value: f64) -> Self {
        Self {
            rule: LambdaKind::Fixed,
            value,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self.rule {
            LambdaKind::Fixed => self.value > 0.0 && self.value.is_finite(),
            LambdaKind::NoiseScaled => {
                self.noiseless_fallback > 0.0 && self.noiseless_fallback.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("lambda rule {self:?} yields a non-positive weight")))
        }
    }

    /// Weight factor for time-domain noise standard deviation `sigma`.
    pub fn resolve(&self, sigma: f64, n: usize) -> Result<f64> {
        match self.rule {
            LambdaKind::Fixed => Ok(self.value),
            LambdaKind::NoiseScaled => {
                let lambda = crate::anm::default_lambda(sigma, n)?;
                Ok(if sigma == 0.0 { self.noiseless_fallback } else { lambda })
            }
        }
    }
}

/// Operator-splitting parameters for the atomic-norm SDP.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverParams {
    /// Initial penalty parameter.
    pub rho: f64,
    /// Threshold on both the primal and dual residual (Frobenius norm).
    pub tolerance: f64,
    pub max_iter: usize,
    /// Residual ratio that triggers a penalty update; 0 disables balancing.
    pub balance_ratio: f64,
    /// Multiplier applied to the penalty on each update.
    pub balance_factor: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            rho: 1.0,
            tolerance: 1e-6,
            max_iter: 5000,
            balance_ratio: 10.0,
            balance_factor: 2.0,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.tolerance > 0.0 && self.max_iter > 0) {
            return Err(Error::InvalidParameter(
                "solver needs rho > 0, tolerance > 0 and max_iter > 0".into(),
            ));
        }
        if self.balance_ratio != 0.0 && !(self.balance_ratio > 1.0 && self.balance_factor > 1.0) {
            return Err(Error::InvalidParameter(
                "residual balancing needs balance_ratio > 1 and balance_factor > 1".into(),
            ));
        }
        Ok(())
    }
}

/// Monte Carlo settings for the sweeps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSettings {
    /// Trials per SNR point.
    pub trials: usize,
    /// Repeated pilot symbols at the head of each frame; the estimator reads
    /// the middle one.
    pub pilot_repetitions: usize,
    /// Run the correlation baseline alongside the estimator (NMSE sweep).
    pub baseline: bool,
    /// Run the perfectly synchronised, known-channel arm (BER sweep).
    pub ideal: bool,
    /// Directory for CSV output.
    pub output: PathBuf,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            trials: 500,
            pilot_repetitions: 3,
            baseline: true,
            ideal: true,
            output: PathBuf::from("results"),
        }
    }
}

/// Single-shot scenario for the `estimate` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Per-user timing offsets in samples.
    pub delta_t: Vec<f64>,
    /// Per-user channel coefficients as `[re, im]` pairs.
    pub gains: Vec<[f64; 2]>,
    /// Noise level; omit (or set `noiseless = true`) for a clean frame.
    pub snr_db: f64,
    pub noiseless: bool,
    /// CSV (`index,re,im`) of received time samples to use instead of a
    /// synthetic frame. Empty string means synthetic.
    pub samples_file: String,
    /// Noise variance assumed for a loaded sample file.
    pub noise_variance: f64,
    /// Offsets above this magnitude (samples) trigger a Timing Advance.
    pub ta_threshold: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            delta_t: vec![2.0, -1.5],
            gains: vec![[0.8, 0.6], [-0.5, 0.7]],
            snr_db: 30.0,
            noiseless: true,
            samples_file: String::new(),
            noise_variance: 0.0,
            ta_threshold: 1.0,
        }
    }
}

impl ScenarioConfig {
    pub fn samples_path(&self) -> Option<&Path> {
        (!self.samples_file.is_empty()).then(|| Path::new(&self.samples_file))
    }
}

/// Whole config file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub system: SystemConfig,
    pub solver: SolverParams,
    pub experiment: ExperimentSettings,
    pub scenario: ScenarioConfig,
}

/// Every config key, its default and a short description. Kept in the same
/// order as the file layout.
pub const CONFIG_KEYS: &[(&str, &str, &str)] = &[
    ("system.n", "64", "subcarriers N; receiver FFT has 2N points"),
    ("system.subbands", "2", "sub-bands B (one per user)"),
    ("system.subband_width", "16", "subcarriers per sub-band n_s"),
    ("system.filter_len", "6", "sub-band FIR length L"),
    ("system.alpha_db", "120.0", "Dolph-Chebyshev side-lobe attenuation (dB)"),
    ("system.data_symbols", "10000", "data symbols per BER point M"),
    ("system.snr_db", "[0.0, 5.0, 10.0, 15.0, 20.0]", "SNR grid (dB)"),
    ("system.seed", "1", "RNG seed"),
    ("system.lambda.rule", "\"noise-scaled\"", "\"noise-scaled\" or \"fixed\""),
    ("system.lambda.value", "1000.0", "weight used by the fixed rule"),
    ("system.lambda.noiseless_fallback", "1000.0", "noise-scaled weight when sigma = 0"),
    ("solver.rho", "1.0", "initial penalty parameter"),
    ("solver.tolerance", "1e-6", "primal/dual residual threshold"),
    ("solver.max_iter", "5000", "iteration cap"),
    ("solver.balance_ratio", "10.0", "residual ratio triggering a penalty update (0 = off)"),
    ("solver.balance_factor", "2.0", "penalty multiplier per update"),
    ("experiment.trials", "500", "trials per SNR point"),
    ("experiment.pilot_repetitions", "3", "repeated pilot symbols per frame"),
    ("experiment.baseline", "true", "run the correlation baseline"),
    ("experiment.ideal", "true", "run the perfect-sync known-channel BER arm"),
    ("experiment.output", "\"results\"", "CSV output directory"),
    ("scenario.delta_t", "[2.0, -1.5]", "per-user timing offsets (samples)"),
    ("scenario.gains", "[[0.8, 0.6], [-0.5, 0.7]]", "per-user channel [re, im]"),
    ("scenario.snr_db", "30.0", "SNR of the synthetic frame"),
    ("scenario.noiseless", "true", "ignore snr_db and add no noise"),
    ("scenario.samples_file", "\"\"", "CSV index,re,im of received samples"),
    ("scenario.noise_variance", "0.0", "noise variance assumed for a sample file"),
    ("scenario.ta_threshold", "1.0", "Timing Advance threshold (samples)"),
];

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_toml_with_overrides::<&str>(text, &[])
    }

    /// Parses `text` and applies `key=value` overrides before validation.
    pub fn from_toml_with_overrides<S: AsRef<str>>(text: &str, overrides: &[S]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e| Error::Config(format!("{e}")))?;
        for item in overrides {
            apply_override(&mut table, item.as_ref())?;
        }
        let cfg: Config = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load<S: AsRef<str>>(path: &Path, overrides: &[S]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.solver.validate()?;
        if self.experiment.trials == 0 {
            return Err(Error::InvalidParameter("experiment.trials must be at least 1".into()));
        }
        if self.experiment.pilot_repetitions < 3 {
            return Err(Error::InvalidParameter(
                "experiment.pilot_repetitions must be at least 3".into(),
            ));
        }
        Ok(())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

fn apply_override(table: &mut toml::Table, item: &str) -> Result<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{item}` is not key=value")))?;
    let key = key.trim();
    if !CONFIG_KEYS.iter().any(|(k, _, _)| *k == key) {
        return Err(Error::Config(format!("unknown config key `{key}`")));
    }
    let value = parse_value(raw.trim());
    let mut parts: Vec<&str> = key.split('.').collect();
    let leaf = parts.pop().expect("non-empty key");
    let mut cursor = table;
    for part in parts {
        cursor = cursor
            .entry(part)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("`{part}` in `{key}` is not a table")))?;
    }
    cursor.insert(leaf.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
