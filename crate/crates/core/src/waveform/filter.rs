use std::f64::consts::{PI, TAU};

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::waveform::fft_zero_padded;
use crate::C64;

/// FIR filter of one sub-band together with its response on the 2N-point
/// receiver grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandFilter {
    pub taps: Vec<C64>,
    /// Zero-based sub-band index.
    pub subband: usize,
    /// 2N-point DFT of the zero-padded taps.
    pub freq_response: Vec<C64>,
}

impl SubbandFilter {
    /// Wraps arbitrary taps; the response grid comes from `cfg`.
    pub fn from_taps(taps: Vec<C64>, subband: usize, cfg: &SystemConfig) -> Result<Self> {
        if taps.is_empty() || taps.len() > cfg.fft_len() {
            return Err(Error::InvalidParameter(format!(
                "filter needs between 1 and {} taps, got {}",
                cfg.fft_len(),
                taps.len()
            )));
        }
        let freq_response = fft_zero_padded(&taps, cfg.fft_len());
        Ok(Self {
            taps,
            subband,
            freq_response,
        })
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }
}

/// Centre of sub-band `subband` (zero-based) in cycles per sample.
pub fn subband_center(subband: usize, cfg: &SystemConfig) -> f64 {
    (subband * cfg.subband_width) as f64 / cfg.n as f64 + cfg.subband_width as f64 / (2.0 * cfg.n as f64)
}

/// Chebyshev polynomial `T_m(x)` for any real `x`.
fn chebyshev_poly(m: usize, x: f64) -> f64 {
    let m = m as f64;
    if x.abs() <= 1.0 {
        (m * x.acos()).cos()
    } else if x > 1.0 {
        (m * x.acosh()).cosh()
    } else {
        let sign = if (m as u64).is_multiple_of(2) { 1.0 } else { -1.0 };
        sign * (m * (-x).acosh()).cosh()
    }
}

/// Real symmetric Dolph-Chebyshev window of `len` taps with side lobes
/// `alpha_db` below the main lobe, scaled to unit energy.
pub fn chebyshev_window(len: usize, alpha_db: f64) -> Result<Vec<f64>> {
    if len == 0 {
        return Err(Error::InvalidParameter("filter length must be at least 1".into()));
    }
    if !(alpha_db > 0.0 && alpha_db.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha_db must be positive, got {alpha_db}")));
    }
    if len == 1 {
        return Ok(vec![1.0]);
    }
    let order = len - 1;
    let ratio = 10f64.powf(alpha_db / 20.0);
    let x0 = (ratio.acosh() / order as f64).cosh();
    let centre = order as f64 / 2.0;
    // Inverse DFT of the equiripple spectrum sampled at `len` points, with
    // the linear phase of a centred window.
    let spectrum: Vec<f64> = (0..len)
        .map(|k| chebyshev_poly(order, x0 * (PI * k as f64 / len as f64).cos()))
        .collect();
    let mut w: Vec<f64> = (0..len)
        .map(|n| {
            spectrum
                .iter()
                .enumerate()
                .map(|(k, &a)| a * (TAU * k as f64 * (n as f64 - centre) / len as f64).cos())
                .sum::<f64>()
                / len as f64
        })
        .collect();
    // Enforce exact symmetry against rounding in the transform.
    for n in 0..len / 2 {
        let avg = 0.5 * (w[n] + w[len - 1 - n]);
        w[n] = avg;
        w[len - 1 - n] = avg;
    }
    let energy = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(w.into_iter().map(|v| v / energy).collect())
}

/// Dolph-Chebyshev prototype modulated to the centre of `subband`
/// (zero-based), unit energy.
pub fn design_chebyshev_filter(
    len: usize,
    alpha_db: f64,
    subband: usize,
    cfg: &SystemConfig,
) -> Result<SubbandFilter> {
    if subband >= cfg.subbands {
        return Err(Error::InvalidParameter(format!(
            "sub-band index {subband} out of range for {} sub-bands",
            cfg.subbands
        )));
    }
    let proto = chebyshev_window(len, alpha_db)?;
    let fc = subband_center(subband, cfg);
    let taps = proto
        .iter()
        .enumerate()
        .map(|(l, &w)| C64::from_polar(w, TAU * fc * l as f64))
        .collect();
    SubbandFilter::from_taps(taps, subband, cfg)
}

/// Ratio in dB between the main-lobe peak and the highest side lobe of a
/// real window, measured on `grid` frequencies over [0, 1/2]. Infinite
/// when the response has no side lobes.
pub fn sidelobe_attenuation_db(window: &[f64], grid: usize) -> f64 {
    let mag: Vec<f64> = (0..=grid)
        .map(|i| {
            let f = 0.5 * i as f64 / grid as f64;
            window
                .iter()
                .enumerate()
                .map(|(n, &w)| C64::from_polar(w, -TAU * f * n as f64))
                .sum::<C64>()
                .norm()
        })
        .collect();
    let Some(null) = (1..mag.len()).find(|&i| mag[i] > mag[i - 1]) else {
        return f64::INFINITY;
    };
    let sidelobe = mag[null - 1..].iter().cloned().fold(0.0, f64::max);
    if sidelobe == 0.0 {
        f64::INFINITY
    } else {
        20.0 * (mag[0] / sidelobe).log10()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_window(len: usize, alpha: f64, expected_half: &[f64]) {
        let w = chebyshev_window(len, alpha).unwrap();
        for (n, e) in expected_half.iter().enumerate() {
            assert!((w[n] - e).abs() < 1e-10, "L={len} n={n}: {} vs {e}", w[n]);
            assert!((w[len - 1 - n] - e).abs() < 1e-10);
        }
    }

    // Reference values: scipy.signal.windows.chebwin, energy-normalized.
    #[test]
    fn matches_reference_windows() {
        assert_window(
            6,
            120.0,
            &[0.06405742279456234, 0.3164449951215181, 0.6290939609052539],
        );
        assert_window(
            7,
            60.0,
            &[0.0543380775769048, 0.23718377438523572, 0.49600845746317185, 0.6241263343564741],
        );
        assert_window(2, 40.0, &[0.7071067811865475]);
        assert_window(
            11,
            80.0,
            &[
                0.00911802988715759,
                0.05232134419290409,
                0.15740249463997757,
                0.318600418186182,
                0.47448969673032554,
                0.5399205393060911,
            ],
        );
    }

    #[test]
    fn single_tap_is_identity() {
        let cfg = SystemConfig::default();
        for alpha in [1.0, 50.0, 300.0] {
            let f = design_chebyshev_filter(1, alpha, 0, &cfg).unwrap();
            assert_eq!(f.taps, vec![C64::new(1.0, 0.0)]);
            assert!(f.freq_response.iter().all(|v| (v - C64::new(1.0, 0.0)).norm() < 1e-15));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let cfg = SystemConfig::default();
        assert!(design_chebyshev_filter(0, 120.0, 0, &cfg).is_err());
        assert!(design_chebyshev_filter(6, 0.0, 0, &cfg).is_err());
        assert!(design_chebyshev_filter(6, -3.0, 0, &cfg).is_err());
        assert!(design_chebyshev_filter(6, 120.0, 2, &cfg).is_err());
    }

    #[test]
    fn unit_energy_and_response() {
        let cfg = SystemConfig::default();
        for b in 0..2 {
            let f = design_chebyshev_filter(6, 120.0, b, &cfg).unwrap();
            let energy: f64 = f.taps.iter().map(|t| t.norm_sqr()).sum();
            assert!((energy - 1.0).abs() < 1e-14);
            assert_eq!(f.freq_response.len(), 128);
            for k in [0usize, 17, 100] {
                let direct: C64 = f
                    .taps
                    .iter()
                    .enumerate()
                    .map(|(l, t)| t * C64::from_polar(1.0, -TAU * (k * l) as f64 / 128.0))
                    .sum();
                assert!((direct - f.freq_response[k]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn passband_sits_on_the_subband() {
        let cfg = SystemConfig::default();
        let f = design_chebyshev_filter(6, 120.0, 1, &cfg).unwrap();
        // Centre of sub-band 1 is subcarrier 24, i.e. bin 48 of 128.
        let peak = (0..128)
            .max_by(|&a, &b| f.freq_response[a].norm().total_cmp(&f.freq_response[b].norm()))
            .unwrap();
        assert_eq!(peak, 48);
    }

    #[test]
    fn attenuation_meets_design() {
        for (len, alpha) in [(6, 120.0), (7, 60.0), (11, 80.0), (16, 50.0)] {
            let w = chebyshev_window(len, alpha).unwrap();
            let att = sidelobe_attenuation_db(&w, 1 << 15);
            assert!(att >= alpha - 1.0, "L={len} alpha={alpha}: {att}");
        }
        assert!(sidelobe_attenuation_db(&[0.5; 4], 4096) < 14.0);
    }
}
