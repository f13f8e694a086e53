//! Signal helpers shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use ufmc_anm::waveform::steering_vector;
use ufmc_anm::C64;

/// Pair of offsets in `(-bound, bound)` at least `gap` apart.
pub fn separated_pair<R: Rng>(rng: &mut R, bound: f64, gap: f64) -> [f64; 2] {
    loop {
        let a = rng.random_range(-bound..bound);
        let b = rng.random_range(-bound..bound);
        if (a - b).abs() >= gap {
            return [a, b];
        }
    }
}

/// `sum_i h_i e(tau_i)` of length `m`.
pub fn atoms(m: usize, atoms: &[(C64, f64)]) -> Vec<C64> {
    let mut g = vec![C64::new(0.0, 0.0); m];
    for &(h, tau) in atoms {
        for (v, e) in g.iter_mut().zip(steering_vector(tau, m)) {
            *v += h * e;
        }
    }
    g
}
