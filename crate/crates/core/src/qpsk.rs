//! Gray-mapped unit-energy QPSK: the first bit selects the sign of the real
//! part, the second the sign of the imaginary part (0 maps to +).

use std::f64::consts::FRAC_1_SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::C64;

pub const BITS_PER_SYMBOL: usize = 2;

pub fn map(b0: bool, b1: bool) -> C64 {
    let level = |b: bool| if b { -FRAC_1_SQRT_2 } else { FRAC_1_SQRT_2 };
    C64::new(level(b0), level(b1))
}

/// Hard decision; ties (exact zeros) resolve to bit 0.
pub fn demap(z: C64) -> (bool, bool) {
    (z.re < 0.0, z.im < 0.0)
}

pub fn random_symbols<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| map(rng.random(), rng.random())).collect()
}

/// Bit errors between sent symbols and the hard decisions on `received`.
pub fn bit_errors(sent: &[C64], received: &[C64]) -> usize {
    sent.iter()
        .zip(received)
        .map(|(&s, &r)| {
            let (a0, a1) = demap(s);
            let (b0, b1) = demap(r);
            usize::from(a0 != b0) + usize::from(a1 != b1)
        })
        .sum()
}

/// The fixed pilot sequence shared by every user.
pub fn pilot_sequence(n: usize) -> Vec<C64> {
    random_symbols(&mut ChaCha8Rng::seed_from_u64(0x0070_696c_6f74), n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gray_mapping() {
        let h = FRAC_1_SQRT_2;
        assert_eq!(map(false, false), C64::new(h, h));
        assert_eq!(map(true, false), C64::new(-h, h));
        assert_eq!(map(true, true), C64::new(-h, -h));
        assert_eq!(map(false, true), C64::new(h, -h));
        // Neighbouring quadrants differ in one bit.
        for (a, b) in [((false, false), (true, false)), ((true, false), (true, true)), ((true, true), (false, true)), ((false, true), (false, false))] {
            assert_eq!(bit_errors(&[map(a.0, a.1)], &[map(b.0, b.1)]), 1);
        }
        for b0 in [false, true] {
            for b1 in [false, true] {
                assert_eq!(demap(map(b0, b1)), (b0, b1));
                assert!((map(b0, b1).norm() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn pilot_is_fixed() {
        assert_eq!(pilot_sequence(16), pilot_sequence(16));
        assert_eq!(pilot_sequence(16)[..8], pilot_sequence(8)[..]);
    }
}
