use crate::error::{Error, Result};
use crate::waveform::Ufmc;
use crate::C64;

/// One detection window and its zero-padded 2N-point spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedFrame {
    /// `N + L - 1` time samples.
    pub samples: Vec<C64>,
    /// `2N` DFT bins.
    pub spectrum: Vec<C64>,
    pub noise_variance: f64,
}

/// Zero-pads the window to 2N samples and transforms it.
pub fn receiver_front_end(sys: &Ufmc, samples: Vec<C64>, noise_variance: f64) -> Result<ReceivedFrame> {
    let expected = sys.config().symbol_len();
    if samples.len() != expected {
        return Err(Error::InvalidInput(format!(
            "receiver window needs {expected} samples, got {}",
            samples.len()
        )));
    }
    let spectrum = sys.spectrum(&samples);
    Ok(ReceivedFrame {
        samples,
        spectrum,
        noise_variance,
    })
}
