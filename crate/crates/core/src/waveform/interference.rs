use crate::waveform::signal::detection_window;
use crate::waveform::{offset_vector, SymbolFrame, Ufmc};
use crate::C64;

/// Split of a delayed pilot window into the phase-ramped pilot spectrum and
/// the residual interference.
#[derive(Debug, Clone, PartialEq)]
pub struct Interference {
    /// Delayed detection window `x_bar`, zero-padded to 2N.
    pub x_bar: Vec<C64>,
    /// `x_tilde`: 2N-periodic shift of the clean pilot, the inverse DFT of
    /// `X . e_dt`.
    pub x_tilde: Vec<C64>,
    /// `X . e_dt`.
    pub shifted_pilot: Vec<C64>,
    /// DFT of `x_bar - x_tilde`.
    pub interference: Vec<C64>,
    /// `sum |X . e_dt|^2 / sum |I|^2` in dB; `+inf` without offset.
    pub eta_db: f64,
}

/// Interference seen by `user`'s pilot under offset `delta_t`, read in the
/// frame's estimation window. Positive and negative offsets give the
/// leading and trailing terms respectively.
pub fn interference_terms(sys: &Ufmc, frame: &SymbolFrame, user: usize, delta_t: f64) -> Interference {
    let len = sys.config().fft_len();
    let window = detection_window(sys, frame, user, frame.estimation_window(), delta_t);
    let mut x_bar = vec![C64::new(0.0, 0.0); len];
    x_bar[..window.len()].copy_from_slice(&window);
    let pilot = sys.pilot_spectrum(&frame.pilot);
    let shifted_pilot: Vec<C64> = pilot
        .iter()
        .zip(offset_vector(delta_t, len))
        .map(|(x, e)| x * e)
        .collect();
    if delta_t == 0.0 {
        return Interference {
            x_tilde: x_bar.clone(),
            x_bar,
            shifted_pilot,
            interference: vec![C64::new(0.0, 0.0); len],
            eta_db: f64::INFINITY,
        };
    }
    let x_tilde = sys.inverse_spectrum(&shifted_pilot);
    let diff: Vec<C64> = x_bar.iter().zip(&x_tilde).map(|(a, b)| a - b).collect();
    let interference = sys.spectrum(&diff);
    let useful: f64 = shifted_pilot.iter().map(|v| v.norm_sqr()).sum();
    let leak: f64 = interference.iter().map(|v| v.norm_sqr()).sum();
    let eta_db = if leak == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (useful / leak).log10()
    };
    Interference {
        x_bar,
        x_tilde,
        shifted_pilot,
        interference,
        eta_db,
    }
}
