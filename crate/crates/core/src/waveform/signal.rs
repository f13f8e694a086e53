use std::f64::consts::TAU;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::waveform::{SubbandFilter, Ufmc};
use crate::C64;

/// Partial IDFT of sub-band `subband` (zero-based) evaluated at real time
/// `t`: `sum_q symbols[q] exp(j 2 pi (k0 + q) t / N)` on `[0, N)`, zero
/// elsewhere. Unnormalized.
pub fn eval_subcarrier_sum(symbols: &[C64], subband: usize, t: f64, cfg: &SystemConfig) -> C64 {
    if !(0.0..cfg.n as f64).contains(&t) {
        return C64::new(0.0, 0.0);
    }
    let k0 = subband * cfg.subband_width;
    symbols
        .iter()
        .enumerate()
        .map(|(q, s)| s * C64::from_polar(1.0, TAU * (k0 + q) as f64 * t / cfg.n as f64))
        .sum()
}

/// Filtered subcarrier sum `sum_l f[l] s(t - l)` at real time `t`.
fn filtered_at(symbols: &[C64], filter: &SubbandFilter, t: f64, cfg: &SystemConfig) -> C64 {
    filter
        .taps
        .iter()
        .enumerate()
        .map(|(l, f)| f * eval_subcarrier_sum(symbols, filter.subband, t - l as f64, cfg))
        .sum()
}

/// One UFMC symbol: `N + L - 1` samples of the filtered partial IDFT.
pub fn synthesize_symbol(symbols: &[C64], filter: &SubbandFilter, cfg: &SystemConfig) -> Vec<C64> {
    (0..cfg.n + filter.len() - 1)
        .map(|n| filtered_at(symbols, filter, n as f64, cfg))
        .collect()
}

/// Symbol content of every user's frame: a run of identical pilot symbols
/// followed by per-user data symbols on the user's own sub-band.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolFrame {
    pub pilot: Vec<C64>,
    pub pilot_symbols: usize,
    /// `data[user][m]` holds `n_s` values.
    pub data: Vec<Vec<Vec<C64>>>,
}

impl SymbolFrame {
    pub fn new(pilot: Vec<C64>, pilot_symbols: usize, data: Vec<Vec<Vec<C64>>>) -> Result<Self> {
        let width = pilot.len();
        let count = data.first().map_or(0, Vec::len);
        if data.is_empty() {
            return Err(Error::InvalidInput("frame needs at least one user".into()));
        }
        if data
            .iter()
            .any(|user| user.len() != count || user.iter().any(|s| s.len() != width))
        {
            return Err(Error::InvalidInput(
                "every user needs the same number of data symbols, each as wide as the pilot".into(),
            ));
        }
        Ok(Self {
            pilot,
            pilot_symbols,
            data,
        })
    }

    pub fn pilots_only(pilot: Vec<C64>, pilot_symbols: usize, users: usize) -> Self {
        Self {
            pilot,
            pilot_symbols,
            data: vec![Vec::new(); users],
        }
    }

    pub fn users(&self) -> usize {
        self.data.len()
    }

    /// Total symbols per user.
    pub fn len(&self) -> usize {
        self.pilot_symbols + self.data.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_pilot(&self, m: usize) -> bool {
        m < self.pilot_symbols
    }

    /// Index of the pilot window fed to the estimator.
    pub fn estimation_window(&self) -> usize {
        self.pilot_symbols / 2
    }
}

/// User `user`'s symbol stream `sum_m x_m(t - m T_U)` evaluated at
/// `t - delta_t`, exactly.
pub fn eval_delayed_stream(sys: &Ufmc, frame: &SymbolFrame, user: usize, t: f64, delta_t: f64) -> C64 {
    let cfg = sys.config();
    let tu = cfg.symbol_len() as f64;
    let shifted = t - delta_t;
    let m = (shifted / tu).floor();
    if m < 0.0 || m >= frame.len() as f64 {
        return C64::new(0.0, 0.0);
    }
    let local = shifted - m * tu;
    let m = m as usize;
    if frame.is_pilot(m) {
        sys.filters()
            .iter()
            .map(|f| filtered_at(&frame.pilot, f, local, cfg))
            .sum()
    } else {
        filtered_at(&frame.data[user][m - frame.pilot_symbols], sys.filter(user), local, cfg)
    }
}

/// Detection window `m` of user `user` seen with offset `delta_t`: samples
/// `m T_U + n - delta_t` for `n = 0..T_U`.
pub fn detection_window(sys: &Ufmc, frame: &SymbolFrame, user: usize, m: usize, delta_t: f64) -> Vec<C64> {
    let tu = sys.config().symbol_len();
    (0..tu)
        .map(|n| eval_delayed_stream(sys, frame, user, (m * tu + n) as f64, delta_t))
        .collect()
}
