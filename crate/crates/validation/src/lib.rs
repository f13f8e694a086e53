//! Reference computations that share no code path with the estimator.

use rand::Rng;
use ufmc_anm::waveform::steering_vector;
use ufmc_anm::C64;

/// Minimum over `c` of `sum |c_i| + lambda ||y - x . (E c)||^2` for fixed
/// atom positions, by accelerated proximal gradient.
pub fn two_atom_value(y: &[C64], x: &[C64], lambda: f64, taus: &[f64]) -> f64 {
    let m = y.len();
    let cols: Vec<Vec<C64>> = taus
        .iter()
        .map(|&tau| steering_vector(tau, m).iter().zip(x).map(|(e, x)| e * x).collect())
        .collect();
    let k = cols.len();
    let gram: Vec<Vec<C64>> = (0..k)
        .map(|i| (0..k).map(|j| cols[i].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum()).collect())
        .collect();
    let rhs: Vec<C64> = cols.iter().map(|c| c.iter().zip(y).map(|(a, b)| a.conj() * b).sum()).collect();
    // Lipschitz constant of the smooth part: 2 lambda ||A||^2, bounded by
    // the Gram matrix's absolute row sums.
    let bound = gram
        .iter()
        .map(|row| row.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let step = 1.0 / (2.0 * lambda * bound);
    let value = |c: &[C64]| -> f64 {
        let mut fit = 0.0;
        for n in 0..m {
            let mut r = y[n];
            for i in 0..k {
                r -= cols[i][n] * c[i];
            }
            fit += r.norm_sqr();
        }
        c.iter().map(|v| v.norm()).sum::<f64>() + lambda * fit
    };
    let prox = |v: C64| -> C64 {
        let mag = v.norm();
        if mag <= step {
            C64::new(0.0, 0.0)
        } else {
            v * ((mag - step) / mag)
        }
    };
    let mut c = vec![C64::new(0.0, 0.0); k];
    let mut z = c.clone();
    let mut momentum = 1.0f64;
    let mut best = value(&c);
    for _ in 0..3000 {
        let grad: Vec<C64> = (0..k)
            .map(|i| 2.0 * lambda * ((0..k).map(|j| gram[i][j] * z[j]).sum::<C64>() - rhs[i]))
            .collect();
        let next: Vec<C64> = (0..k).map(|i| prox(z[i] - step * grad[i])).collect();
        let m_next = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = (momentum - 1.0) / m_next;
        z = (0..k).map(|i| next[i] + beta * (next[i] - c[i])).collect();
        c = next;
        momentum = m_next;
        let v = value(&c);
        if v > best {
            // Restart on an objective increase.
            z = c.clone();
            momentum = 1.0;
        }
        best = best.min(v);
    }
    best
}

/// Best two-atom objective over `tau in [-1/2, 1/2)`, refined
/// hierarchically down to a `1e-4` grid.
pub fn grid_oracle(y: &[C64], x: &[C64], lambda: f64) -> (f64, [f64; 2]) {
    let coarse = 1.0 / 128.0;
    let mut best = (f64::INFINITY, [0.0, 0.0]);
    let points: Vec<f64> = (0..128).map(|i| -0.5 + i as f64 * coarse).collect();
    for (i, &a) in points.iter().enumerate() {
        for &b in &points[i + 1..] {
            let v = two_atom_value(y, x, lambda, &[a, b]);
            if v < best.0 {
                best = (v, [a, b]);
            }
        }
    }
    for (step, span) in [(1e-3, 2.0 * coarse), (1e-4, 2e-3)] {
        let centre = best.1;
        let count = (span / step).round() as i64;
        for i in -count..=count {
            for j in -count..=count {
                let a = centre[0] + i as f64 * step;
                let b = centre[1] + j as f64 * step;
                let v = two_atom_value(y, x, lambda, &[a, b]);
                if v < best.0 {
                    best = (v, [a, b]);
                }
            }
        }
    }
    best
}

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
