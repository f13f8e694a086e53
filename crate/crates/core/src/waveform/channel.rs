use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::C64;

/// Flat per-user channel coefficients and timing offsets (samples).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: Vec<C64>,
    pub delta_t: Vec<f64>,
}

impl ChannelRealization {
    pub fn new(h: Vec<C64>, delta_t: Vec<f64>) -> Result<Self> {
        if h.len() != delta_t.len() {
            return Err(Error::InvalidInput(format!(
                "{} channel coefficients but {} offsets",
                h.len(),
                delta_t.len()
            )));
        }
        if h.iter().any(|v| !v.is_finite()) || delta_t.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("channel parameters must be finite".into()));
        }
        Ok(Self { h, delta_t })
    }

    /// `H_i ~ CN(0, 1)` and `delta_t_i ~ U(-bound, bound)`, i.i.d.
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, users: usize, bound: f64) -> Self {
        let h = (0..users).map(|_| complex_gaussian(rng, 1.0)).collect();
        let delta_t = (0..users)
            .map(|_| loop {
                let v = rng.random_range(-bound..bound);
                if v > -bound {
                    break v;
                }
            })
            .collect();
        Self { h, delta_t }
    }

    pub fn users(&self) -> usize {
        self.h.len()
    }
}

/// Circularly-symmetric complex Gaussian with total variance `variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// `y[n] = sum_i H_i w_i[n] + noise[n]` where `windows[i]` already carries
/// user `i`'s offset. Noise is `CN(0, sigma2)` per sample; no draws are
/// made when `sigma2 == 0`.
pub fn apply_channel_and_noise<R: Rng + ?Sized>(
    windows: &[Vec<C64>],
    channel: &ChannelRealization,
    sigma2: f64,
    rng: &mut R,
) -> Result<Vec<C64>> {
    if windows.len() != channel.users() {
        return Err(Error::InvalidInput(format!(
            "{} user windows for {} channel coefficients",
            windows.len(),
            channel.users()
        )));
    }
    let len = windows.first().map_or(0, Vec::len);
    if windows.iter().any(|w| w.len() != len) {
        return Err(Error::InvalidInput("user windows differ in length".into()));
    }
    if !(sigma2 >= 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidInput(format!("noise variance must be non-negative, got {sigma2}")));
    }
    let mut y = vec![C64::new(0.0, 0.0); len];
    for (w, h) in windows.iter().zip(&channel.h) {
        for (acc, v) in y.iter_mut().zip(w) {
            *acc += h * v;
        }
    }
    if sigma2 > 0.0 {
        for v in y.iter_mut() {
            *v += complex_gaussian(rng, sigma2);
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ramp(len: usize, a: f64) -> Vec<C64> {
        (0..len).map(|n| C64::new(a * n as f64, (a * n as f64).sin())).collect()
    }

    #[test]
    fn clean_single_user_passthrough() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let w = ramp(69, 0.1);
        let ch = ChannelRealization::new(vec![C64::new(1.0, 0.0)], vec![0.0]).unwrap();
        assert_eq!(apply_channel_and_noise(&[w.clone()], &ch, 0.0, &mut rng).unwrap(), w);
    }

    #[test]
    fn superposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ws = vec![ramp(69, 0.1), ramp(69, -0.7)];
        let h = vec![C64::new(0.3, -1.0), C64::new(-0.2, 0.5)];
        let ch = ChannelRealization::new(h.clone(), vec![1.0, -2.0]).unwrap();
        let y = apply_channel_and_noise(&ws, &ch, 0.0, &mut rng).unwrap();
        for n in 0..69 {
            let oracle = h[0] * ws[0][n] + h[1] * ws[1][n];
            assert!((y[n] - oracle).norm() < 1e-15);
        }
    }

    #[test]
    fn noise_variance_is_calibrated() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ws = vec![vec![C64::new(0.0, 0.0); 100_000]];
        let ch = ChannelRealization::new(vec![C64::new(0.0, 0.0)], vec![0.0]).unwrap();
        let y = apply_channel_and_noise(&ws, &ch, 1.0, &mut rng).unwrap();
        let var = y.iter().map(|v| v.norm_sqr()).sum::<f64>() / y.len() as f64;
        assert!((var - 1.0).abs() < 0.03, "{var}");
        let mean_re = y.iter().map(|v| v.re).sum::<f64>() / y.len() as f64;
        let var_re = y.iter().map(|v| v.re * v.re).sum::<f64>() / y.len() as f64;
        assert!(mean_re.abs() < 0.01);
        assert!((var_re - 0.5).abs() < 0.02);
    }

    #[test]
    fn mismatched_inputs_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ch = ChannelRealization::new(vec![C64::new(1.0, 0.0); 2], vec![0.0; 2]).unwrap();
        assert!(apply_channel_and_noise(&[ramp(4, 1.0)], &ch, 0.0, &mut rng).is_err());
        assert!(apply_channel_and_noise(&[ramp(4, 1.0), ramp(5, 1.0)], &ch, 0.0, &mut rng).is_err());
        assert!(ChannelRealization::new(vec![C64::new(1.0, 0.0)], vec![]).is_err());
    }

    #[test]
    fn draws_respect_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let ch = ChannelRealization::draw(&mut rng, 2, 6.0);
            assert!(ch.delta_t.iter().all(|d| d.abs() < 6.0));
            assert!(ch.h.iter().all(|h| h.norm() > 0.0));
        }
    }
}
