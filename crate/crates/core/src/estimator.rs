//! From an atomic-norm solution to per-user offsets and channels.

use std::f64::consts::TAU;
use std::ops::RangeInclusive;

use faer::Mat;

use crate::anm::{self, AnmProblem};
use crate::config::{SolverParams, SystemConfig};
use crate::error::{Error, Result, Stage};
use crate::linalg::{self, HermitianToeplitz};
use crate::waveform::{steering_vector, wrap_tau, ReceivedFrame};
use crate::C64;

/// Eigenvalue ratio below which a Toeplitz component counts as absent.
pub const RANK_TOLERANCE: f64 = 1e-12;
/// Largest acceptable condition number for the pencil and LS systems.
pub const CONDITION_LIMIT: f64 = 1e10;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverDiagnostics {
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    /// In `[-1/2, 1/2)`, ascending.
    pub taus: Vec<f64>,
    /// `-2N tau` wrapped into `(-N, N]`.
    pub delta_t_hats: Vec<f64>,
    pub h_hats: Vec<C64>,
    /// `association[i]` is the estimate matched to user `i`; identity until
    /// [`EstimationResult::associate_with`] is called.
    pub association: Vec<usize>,
    /// `||Y - X . E h||`.
    pub residual_norm: f64,
    /// `||g - E h||`.
    pub atomic_residual: f64,
    /// Offsets at or beyond the filter-length prior `|dt| < L`.
    pub outside_prior: Vec<bool>,
    /// Set when the observation has no energy; all estimates are zero.
    pub no_signal: bool,
    pub solver: Option<SolverDiagnostics>,
}

impl EstimationResult {
    /// Reorders the association so that estimate `association[i]` belongs
    /// to `truth[i]`.
    pub fn associate_with(&mut self, truth: &[f64]) {
        self.association = associate(&self.delta_t_hats, truth);
    }

    /// Offsets in user order under the current association.
    pub fn associated_delta_t(&self) -> Vec<f64> {
        self.association.iter().map(|&j| self.delta_t_hats[j]).collect()
    }

    pub fn associated_h(&self) -> Vec<C64> {
        self.association.iter().map(|&j| self.h_hats[j]).collect()
    }
}

/// Extracts `order` frequencies from a (nearly) rank-`order` PSD Toeplitz
/// matrix by the matrix pencil on its dominant eigen-factor.
pub fn matrix_pencil(toeplitz: &HermitianToeplitz, order: usize) -> Result<Vec<f64>> {
    let n = toeplitz.dim();
    if order == 0 || order + 1 > n {
        return Err(Error::InvalidParameter(format!(
            "model order {order} must lie in 1..={}",
            n.saturating_sub(1)
        )));
    }
    let (values, vectors) = linalg::hermitian_eigen(toeplitz.to_dense().as_ref())?;
    let top = values[n - 1];
    let rank = if top > 0.0 {
        values.iter().filter(|&&v| v >= RANK_TOLERANCE * top).count()
    } else {
        0
    };
    if rank < order {
        return Err(Error::RankDeficient { rank, order });
    }
    // Columns in descending eigenvalue order, scaled by sqrt(eigenvalue).
    let factor = Mat::<C64>::from_fn(n, order, |i, j| {
        let k = n - 1 - j;
        vectors[(i, k)] * values[k].sqrt()
    });
    let upper = factor.subrows(0, n - 1);
    let lower = factor.subrows(1, n - 1);
    let gram = upper.adjoint() * upper;
    let cross = upper.adjoint() * lower;
    let (pencil, cond) = linalg::solve_or_pinv(gram.as_ref(), cross.as_ref(), CONDITION_LIMIT)?;
    if cond > CONDITION_LIMIT {
        log::warn!("matrix pencil Gram condition number {cond:.2e}; using pseudo-inverse");
    }
    let mut taus: Vec<f64> = linalg::eigenvalues(pencil.as_ref())?
        .into_iter()
        .map(|d| wrap_tau(d.arg() / TAU))
        .collect();
    taus.sort_by(f64::total_cmp);
    Ok(taus)
}

/// `-2N tau` wrapped into `(-N, N]`.
pub fn tau_to_delta_t(tau: f64, cfg: &SystemConfig) -> f64 {
    let period = cfg.fft_len() as f64;
    let half = cfg.n as f64;
    let dt = -period * tau;
    if dt > -half && dt <= half {
        return dt;
    }
    let r = dt.rem_euclid(period);
    if r > half {
        r - period
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsChannels {
    pub h: Vec<C64>,
    /// `||g - E h||`.
    pub residual: f64,
    pub condition: f64,
}

/// Least-squares coefficients of `g_hat` on the steering vectors of `taus`.
pub fn ls_channels(taus: &[f64], g_hat: &[C64]) -> Result<LsChannels> {
    let m = g_hat.len();
    if taus.is_empty() || taus.len() > m {
        return Err(Error::InvalidParameter(format!(
            "need between 1 and {m} frequencies, got {}",
            taus.len()
        )));
    }
    let columns: Vec<Vec<C64>> = taus.iter().map(|&tau| steering_vector(tau, m)).collect();
    let e = Mat::<C64>::from_fn(m, taus.len(), |i, j| columns[j][i]);
    let gram = e.adjoint() * &e;
    let rhs = e.adjoint() * linalg::column(g_hat);
    let (h, condition) = linalg::solve_checked(gram.as_ref(), rhs.as_ref(), CONDITION_LIMIT)?;
    let fitted = &e * &h;
    let residual = (0..m)
        .map(|i| (g_hat[i] - fitted[(i, 0)]).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(LsChannels {
        h: (0..taus.len()).map(|j| h[(j, 0)]).collect(),
        residual,
        condition,
    })
}

/// Full pipeline on one received pilot window: ADMM, matrix pencil,
/// offset conversion and least-squares channels. `pilot_spectrum` is the
/// 2N-point spectrum of the clean pilot symbol.
pub fn joint_estimate(
    received: &ReceivedFrame,
    pilot_spectrum: &[C64],
    cfg: &SystemConfig,
    params: &SolverParams,
) -> Result<EstimationResult> {
    let order = cfg.subbands;
    let y = &received.spectrum;
    if y.len() != cfg.fft_len() || pilot_spectrum.len() != cfg.fft_len() {
        return Err(Error::InvalidInput(format!(
            "spectra must have {} bins",
            cfg.fft_len()
        )));
    }
    if y.iter().all(|v| v.norm_sqr() == 0.0) {
        return Ok(EstimationResult {
            taus: vec![0.0; order],
            delta_t_hats: vec![0.0; order],
            h_hats: vec![C64::new(0.0, 0.0); order],
            association: (0..order).collect(),
            residual_norm: 0.0,
            atomic_residual: 0.0,
            outside_prior: vec![false; order],
            no_signal: true,
            solver: None,
        });
    }
    let sigma = received.noise_variance.sqrt();
    let lambda = cfg.lambda.resolve(sigma, cfg.n)?;
    let problem = AnmProblem::new(y.clone(), pilot_spectrum.to_vec(), lambda, *params)?;
    let solution = anm::solve(&problem).map_err(Error::at(Stage::Solver))?;
    if !solution.converged {
        log::debug!(
            "solver stopped at the iteration cap (primal {:.2e}, dual {:.2e})",
            solution.primal_residual,
            solution.dual_residual
        );
    }
    let taus = matrix_pencil(&solution.toeplitz, order).map_err(Error::at(Stage::Pencil))?;
    let delta_t_hats: Vec<f64> = taus.iter().map(|&tau| tau_to_delta_t(tau, cfg)).collect();
    let ls = ls_channels(&taus, &solution.g).map_err(Error::at(Stage::LeastSquares))?;

    let mut model = vec![C64::new(0.0, 0.0); y.len()];
    for (&tau, h) in taus.iter().zip(&ls.h) {
        for (m, e) in model.iter_mut().zip(steering_vector(tau, y.len())) {
            *m += h * e;
        }
    }
    let residual_norm = y
        .iter()
        .zip(pilot_spectrum)
        .zip(&model)
        .map(|((y, x), m)| (y - x * m).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let bound = cfg.filter_len as f64;
    Ok(EstimationResult {
        outside_prior: delta_t_hats.iter().map(|d| d.abs() >= bound).collect(),
        taus,
        delta_t_hats,
        h_hats: ls.h,
        association: (0..order).collect(),
        residual_norm,
        atomic_residual: ls.residual,
        no_signal: false,
        solver: Some(SolverDiagnostics {
            lambda,
            iterations: solution.iterations,
            converged: solution.converged,
            primal_residual: solution.primal_residual,
            dual_residual: solution.dual_residual,
        }),
    })
}

/// Permutation `p` minimising `sum_i (estimates[p[i]] - truth[i])^2`.
pub fn associate(estimates: &[f64], truth: &[f64]) -> Vec<usize> {
    assert_eq!(estimates.len(), truth.len(), "association needs equal lengths");
    let sq = |a: f64, b: f64| (a - b) * (a - b);
    match truth.len() {
        0 => Vec::new(),
        1 => vec![0],
        2 => {
            let keep = sq(estimates[0], truth[0]) + sq(estimates[1], truth[1]);
            let swap = sq(estimates[1], truth[0]) + sq(estimates[0], truth[1]);
            if swap < keep {
                vec![1, 0]
            } else {
                vec![0, 1]
            }
        }
        n => {
            let cost: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..n).map(|j| sq(estimates[j], truth[i])).collect())
                .collect();
            min_cost_assignment(&cost)
        }
    }
}

/// Hungarian algorithm (shortest augmenting paths with potentials) on a
/// square cost matrix; returns the column assigned to each row.
fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // One-based arrays; index 0 is the virtual start column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut min_to = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let reduced = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if reduced < min_to[j] {
                    min_to[j] = reduced;
                    way[j] = j0;
                }
                if min_to[j] < delta {
                    delta = min_to[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        while j0 != 0 {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[row_of[j] - 1] = j - 1;
    }
    assignment
}

/// Flags users whose `|dt_hat|` strictly exceeds `threshold`.
pub fn timing_advance_decision(delta_t_hats: &[f64], threshold: f64) -> Result<Vec<bool>> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "Timing Advance threshold must be positive, got {threshold}"
        )));
    }
    Ok(delta_t_hats.iter().map(|d| d.abs() > threshold).collect())
}

/// Single-peak timing estimate: circular cross-correlation (period = window
/// length) of `received` with the clean `pilot` over integer `lags`, with
/// three-point parabolic refinement around the peak.
pub fn correlation_baseline(received: &[C64], pilot: &[C64], lags: RangeInclusive<i64>, n: usize) -> Result<f64> {
    if lags.is_empty() {
        return Err(Error::InvalidParameter("empty correlation search range".into()));
    }
    let limit = n as i64;
    if *lags.start() <= -limit || *lags.end() >= limit {
        return Err(Error::InvalidParameter(format!(
            "search range {lags:?} must lie strictly inside (-{n}, {n})"
        )));
    }
    let period = received.len();
    if pilot.len() != period || period == 0 {
        return Err(Error::InvalidInput("received window and pilot differ in length".into()));
    }
    let corr = |lag: i64| -> f64 {
        (0..period)
            .map(|k| {
                let src = (k as i64 - lag).rem_euclid(period as i64) as usize;
                received[k] * pilot[src].conj()
            })
            .sum::<C64>()
            .norm()
    };
    let values: Vec<(i64, f64)> = lags.clone().map(|d| (d, corr(d))).collect();
    let &(best, peak) = values
        .iter()
        .fold(&values[0], |acc, item| if item.1 > acc.1 { item } else { acc });
    let (lo, hi) = (best - 1, best + 1);
    if !lags.contains(&lo) || !lags.contains(&hi) {
        return Ok(best as f64);
    }
    let (a, c) = (corr(lo), corr(hi));
    let curvature = a - 2.0 * peak + c;
    if curvature >= 0.0 {
        return Ok(best as f64);
    }
    let offset = (0.5 * (a - c) / curvature).clamp(-0.5, 0.5);
    Ok(best as f64 + offset)
}
