use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ufmc_anm::qpsk;
use ufmc_anm::waveform::*;
use ufmc_anm::{SystemConfig, C64};

fn system() -> Ufmc {
    Ufmc::new(&SystemConfig::default()).unwrap()
}

fn pilots(seed: u64) -> SymbolFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SymbolFrame::pilots_only(qpsk::random_symbols(&mut rng, 16), 3, 2)
}

fn energy(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum()
}

#[test]
fn parseval_for_front_end() {
    let sys = system();
    let cfg = sys.config().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let scale = 10f64.powf(rng.random_range(-3.0..3.0));
        let samples: Vec<C64> = (0..cfg.symbol_len())
            .map(|_| complex_gaussian(&mut rng, scale))
            .collect();
        let time = energy(&samples);
        let frame = receiver_front_end(&sys, samples, 0.0).unwrap();
        let freq = energy(&frame.spectrum) / cfg.fft_len() as f64;
        assert!((freq - time).abs() <= 1e-9 * time, "{freq} vs {time}");
    }
}

#[test]
fn integer_offsets_are_circular_shifts_of_the_aligned_window() {
    let sys = system();
    let frame = pilots(5);
    let m = frame.estimation_window();
    let period = sys.config().symbol_len() as i64;
    for user in 0..2 {
        let aligned = detection_window(&sys, &frame, user, m, 0.0);
        for d in -5i64..=5 {
            let shifted = detection_window(&sys, &frame, user, m, d as f64);
            for (n, v) in shifted.iter().enumerate() {
                let src = (n as i64 - d).rem_euclid(period) as usize;
                assert!((v - aligned[src]).norm() < 1e-12, "user {user} d {d} n {n}");
            }
        }
    }
}

#[test]
fn fractional_offsets_match_the_continuous_symbol() {
    // In the steady-state window a delay of dt reads the aligned pilot
    // symbol at (n - dt) mod T_U, evaluated off the sample grid.
    let sys = system();
    let cfg = sys.config().clone();
    let frame = pilots(6);
    let m = frame.estimation_window();
    let t_u = cfg.symbol_len() as f64;
    let symbol_at = |t: f64| -> C64 {
        sys.filters()
            .iter()
            .map(|f| {
                f.taps
                    .iter()
                    .enumerate()
                    .map(|(l, tap)| tap * eval_subcarrier_sum(&frame.pilot, f.subband, t - l as f64, &cfg))
                    .sum::<C64>()
            })
            .sum()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..40 {
        let dt = rng.random_range(-5.99..5.99);
        let user = rng.random_range(0..2);
        let window = detection_window(&sys, &frame, user, m, dt);
        for (n, v) in window.iter().enumerate() {
            let expect = symbol_at((n as f64 - dt).rem_euclid(t_u));
            assert!((v - expect).norm() < 1e-10, "dt {dt} n {n}");
        }
    }
}

#[test]
fn decomposition_identity_both_signs() {
    let sys = system();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst = 0.0f64;
    for draw in 0..100 {
        let frame = pilots(1000 + draw);
        let magnitude = rng.random_range(0.01..5.99);
        let dt = if draw % 2 == 0 { magnitude } else { -magnitude };
        let r = interference_terms(&sys, &frame, draw as usize % 2, dt);
        let received = sys.spectrum(&r.x_bar);
        for ((y, x), i) in received.iter().zip(&r.shifted_pilot).zip(&r.interference) {
            worst = worst.max((y - (x + i)).norm());
        }
    }
    assert!(worst < 1e-9, "{worst}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn channel_is_linear(
        seed in any::<u64>(),
        dt0 in -5.9f64..5.9,
        dt1 in -5.9f64..5.9,
    ) {
        let sys = system();
        let frame = pilots(seed);
        let m = frame.estimation_window();
        let windows: Vec<Vec<C64>> = [dt0, dt1]
            .iter()
            .enumerate()
            .map(|(i, &dt)| detection_window(&sys, &frame, i, m, dt))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h: Vec<C64> = (0..2).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let h2: Vec<C64> = (0..2).map(|_| complex_gaussian(&mut rng, 1.0)).collect();
        let sum: Vec<C64> = h.iter().zip(&h2).map(|(a, b)| a + b).collect();
        let run = |gains: Vec<C64>| {
            let ch = ChannelRealization::new(gains, vec![dt0, dt1]).unwrap();
            apply_channel_and_noise(&windows, &ch, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap()
        };
        let (a, b, c) = (run(h), run(h2), run(sum));
        for n in 0..a.len() {
            prop_assert!((a[n] + b[n] - c[n]).norm() <= 1e-13 * (1.0 + c[n].norm()));
        }
    }

    #[test]
    fn steering_vectors_have_unit_modulus(tau in -0.5f64..0.5, len in 1usize..256) {
        for v in steering_vector(tau, len) {
            prop_assert!((v * v.conj() - 1.0).norm() < 1e-14);
        }
    }

    #[test]
    fn pilot_spectrum_matches_sum_of_subband_symbols(seed in any::<u64>()) {
        let sys = system();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pilot = qpsk::random_symbols(&mut rng, 16);
        let mut total = vec![C64::new(0.0, 0.0); sys.config().symbol_len()];
        for f in sys.filters() {
            for (acc, v) in total.iter_mut().zip(synthesize_symbol(&pilot, f, sys.config())) {
                *acc += v;
            }
        }
        let direct = sys.pilot_spectrum(&pilot);
        for (a, b) in sys.spectrum(&total).iter().zip(&direct) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }
}

#[test]
fn transmit_power_calibration() {
    // Long-run average sample power of random data symbols against the
    // value used to set the noise level.
    let sys = system();
    let cfg = sys.config().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let symbols = 4000;
    let mut power = 0.0;
    for _ in 0..symbols {
        let b = rng.random_range(0..cfg.subbands);
        let data = qpsk::random_symbols(&mut rng, cfg.subband_width);
        power += energy(&synthesize_symbol(&data, sys.filter(b), &cfg)) / cfg.symbol_len() as f64;
    }
    let measured = power / symbols as f64;
    let assumed = sys.average_transmit_power();
    assert!((measured / assumed - 1.0).abs() < 0.01, "{measured} vs {assumed}");
    let sigma2 = sys.noise_variance(10.0);
    assert!((assumed / (cfg.fft_len() as f64 * sigma2) - 10.0).abs() < 1e-12);
}

#[test]
fn noise_has_requested_variance() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 200_000;
    let var: f64 = (0..n).map(|_| complex_gaussian(&mut rng, 0.25).norm_sqr()).sum::<f64>() / n as f64;
    assert!((var - 0.25).abs() < 0.005, "{var}");
}
