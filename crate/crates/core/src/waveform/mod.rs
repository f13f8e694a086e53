//! UFMC uplink signal model.
//!
//! Each user owns one sub-band of `n_s` adjacent subcarriers and one FIR
//! filter. A symbol is the filtered partial IDFT of its subcarrier values
//! and occupies `T_U = N + L - 1` samples; symbols follow back to back.
//! The receiver zero-pads one `T_U` window to `2N` samples and takes an
//! FFT, so subcarrier `k` lands on bin `2k`.
//!
//! Every user sends the same pilot symbol. A pilot occupies all `B`
//! sub-bands (each passed through its own filter), which makes the pilot
//! spectrum `X` identical across users and gives the model
//! `Y = X . sum_i H_i e(tau_i) + I + W`.

mod channel;
mod filter;
mod interference;
mod receiver;
mod signal;

use std::f64::consts::TAU;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

pub use channel::{apply_channel_and_noise, complex_gaussian, ChannelRealization};
pub use filter::{
    chebyshev_window, design_chebyshev_filter, sidelobe_attenuation_db, subband_center, SubbandFilter,
};
pub use interference::{interference_terms, Interference};
pub use receiver::{receiver_front_end, ReceivedFrame};
pub use signal::{detection_window, eval_delayed_stream, eval_subcarrier_sum, synthesize_symbol, SymbolFrame};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::C64;

/// DFT of `x` zero-padded (or truncated) to `len` points.
pub fn fft_zero_padded(x: &[C64], len: usize) -> Vec<C64> {
    let mut buf = vec![C64::new(0.0, 0.0); len];
    let n = x.len().min(len);
    buf[..n].copy_from_slice(&x[..n]);
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    buf
}

/// `e(tau)[n] = exp(j 2 pi n tau)`, `n = 0..len`.
pub fn steering_vector(tau: f64, len: usize) -> Vec<C64> {
    (0..len)
        .map(|n| C64::from_polar(1.0, TAU * n as f64 * tau))
        .collect()
}

/// Maps `tau` into `[-1/2, 1/2)`.
pub fn wrap_tau(tau: f64) -> f64 {
    let w = tau - (tau + 0.5).floor();
    if w >= 0.5 {
        w - 1.0
    } else {
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    pub values: Vec<C64>,
    /// The wrapped `tau` actually used.
    pub tau: f64,
    /// Set when the requested `tau` was outside `[-1/2, 1/2)`.
    pub wrapped: bool,
}

/// Steering vector of length `2N`.
pub fn build_steering_vector(tau: f64, cfg: &SystemConfig) -> SteeringVector {
    let wrapped = !(-0.5..0.5).contains(&tau);
    let tau = if wrapped { wrap_tau(tau) } else { tau };
    if wrapped {
        log::warn!("steering parameter outside [-1/2, 1/2); wrapped to {tau}");
    }
    SteeringVector {
        values: steering_vector(tau, cfg.fft_len()),
        tau,
        wrapped,
    }
}

/// Phase ramp of a delay: `e_dt[k] = exp(-j 2 pi k dt / len)`.
pub fn offset_vector(delta_t: f64, len: usize) -> Vec<C64> {
    steering_vector(-delta_t / len as f64, len)
}

/// Validated system with its sub-band filters and receiver FFT plans.
#[derive(Clone)]
pub struct Ufmc {
    cfg: SystemConfig,
    filters: Vec<SubbandFilter>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Ufmc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Ufmc")
            .field("cfg", &self.cfg)
            .field("filters", &self.filters)
            .finish_non_exhaustive()
    }
}

impl Ufmc {
    /// Designs one Dolph-Chebyshev filter per sub-band.
    pub fn new(cfg: &SystemConfig) -> Result<Self> {
        cfg.validate()?;
        let filters = (0..cfg.subbands)
            .map(|b| design_chebyshev_filter(cfg.filter_len, cfg.alpha_db, b, cfg))
            .collect::<Result<Vec<_>>>()?;
        Self::with_filters(cfg, filters)
    }

    /// Uses caller-supplied filters, one per sub-band in order, each of
    /// length `cfg.filter_len`.
    pub fn with_filters(cfg: &SystemConfig, filters: Vec<SubbandFilter>) -> Result<Self> {
        cfg.validate()?;
        if filters.len() != cfg.subbands
            || filters
                .iter()
                .enumerate()
                .any(|(b, f)| f.subband != b || f.len() != cfg.filter_len)
        {
            return Err(Error::InvalidParameter(
                "need one filter of length filter_len per sub-band, in order".into(),
            ));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            forward: planner.plan_fft_forward(cfg.fft_len()),
            inverse: planner.plan_fft_inverse(cfg.fft_len()),
            cfg: cfg.clone(),
            filters,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn filters(&self) -> &[SubbandFilter] {
        &self.filters
    }

    pub fn filter(&self, subband: usize) -> &SubbandFilter {
        &self.filters[subband]
    }

    /// 2N-point DFT of `x` zero-padded; `x` must not be longer than 2N.
    pub fn spectrum(&self, x: &[C64]) -> Vec<C64> {
        let mut buf = vec![C64::new(0.0, 0.0); self.cfg.fft_len()];
        buf[..x.len()].copy_from_slice(x);
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse 2N-point DFT, including the `1/2N` factor.
    pub fn inverse_spectrum(&self, spectrum: &[C64]) -> Vec<C64> {
        let mut buf = spectrum.to_vec();
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.cfg.fft_len() as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
        buf
    }

    /// Time samples of the pilot symbol (all sub-bands, each filtered).
    pub fn pilot_symbol(&self, pilot: &[C64]) -> Vec<C64> {
        let mut x = vec![C64::new(0.0, 0.0); self.cfg.symbol_len()];
        for f in &self.filters {
            for (acc, v) in x.iter_mut().zip(synthesize_symbol(pilot, f, &self.cfg)) {
                *acc += v;
            }
        }
        x
    }

    /// Known pilot spectrum `X` on the 2N grid.
    pub fn pilot_spectrum(&self, pilot: &[C64]) -> Vec<C64> {
        self.spectrum(&self.pilot_symbol(pilot))
    }

    /// Mean sample power of a data symbol of sub-band `subband` carrying
    /// i.i.d. unit-power symbols, averaged over the `T_U` samples.
    pub fn data_symbol_power(&self, subband: usize) -> f64 {
        let cfg = &self.cfg;
        let taps = &self.filter(subband).taps;
        let k0 = subband * cfg.subband_width;
        let mut energy = 0.0;
        for q in 0..cfg.subband_width {
            let k = (k0 + q) as f64;
            for n in 0..cfg.symbol_len() {
                let lo = n.saturating_sub(cfg.n - 1);
                let hi = n.min(taps.len() - 1);
                let v: C64 = (lo..=hi)
                    .map(|l| taps[l] * C64::from_polar(1.0, TAU * k * (n - l) as f64 / cfg.n as f64))
                    .sum();
                energy += v.norm_sqr();
            }
        }
        energy / cfg.symbol_len() as f64
    }

    /// Average transmit sample power `P` of a user's data stream, averaged
    /// over users.
    pub fn average_transmit_power(&self) -> f64 {
        (0..self.cfg.subbands).map(|b| self.data_symbol_power(b)).sum::<f64>() / self.cfg.subbands as f64
    }

    /// Per-sample noise variance for `snr_db` under `SNR = P / (2N sigma^2)`.
    pub fn noise_variance(&self, snr_db: f64) -> f64 {
        self.average_transmit_power() / (self.cfg.fft_len() as f64 * 10f64.powf(snr_db / 10.0))
    }
}
