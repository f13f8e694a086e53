//! Regularised atomic-norm problem
//!
//! ```text
//! minimise  Tr(T)/(4N) + t/2 + lambda ||Y - X . g||^2
//! s.t.      [[T, g], [g^H, t]] PSD,  T Hermitian Toeplitz (2N x 2N)
//! ```
//!
//! solved by ADMM on the split `Theta = Z`, where `Theta` carries the
//! Toeplitz structure and the smooth objective and `Z` the PSD cone. Each
//! iteration costs one (2N+1)-dimensional Hermitian eigendecomposition.

use faer::Mat;

use crate::config::{SolverParams, DEFAULT_NOISELESS_LAMBDA};
use crate::error::{Error, Result};
use crate::linalg::{self, HermitianToeplitz};
use crate::waveform::steering_vector;
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct AnmProblem {
    /// Observed spectrum, length 2N.
    pub y: Vec<C64>,
    /// Known pilot spectrum, length 2N.
    pub x: Vec<C64>,
    /// Weight on the data-fidelity term.
    pub lambda: f64,
    pub params: SolverParams,
}

impl AnmProblem {
    pub fn new(y: Vec<C64>, x: Vec<C64>, lambda: f64, params: SolverParams) -> Result<Self> {
        let p = Self { y, x, lambda, params };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.y.len() != self.x.len() || self.y.is_empty() {
            return Err(Error::InvalidInput(format!(
                "observation and pilot spectra must have the same non-zero length ({} vs {})",
                self.y.len(),
                self.x.len()
            )));
        }
        if self.y.iter().chain(&self.x).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("spectra contain non-finite values".into()));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {}", self.lambda)));
        }
        self.params.validate()
    }

    pub fn dim(&self) -> usize {
        self.y.len()
    }

    /// Objective at an arbitrary point; `trace` is `Tr(T)`.
    pub fn objective(&self, trace: f64, g: &[C64], t: f64) -> f64 {
        let fit: f64 = self
            .y
            .iter()
            .zip(&self.x)
            .zip(g)
            .map(|((y, x), g)| (y - x * g).norm_sqr())
            .sum();
        trace / (2.0 * self.dim() as f64) + t / 2.0 + self.lambda * fit
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnmSolution {
    pub g: Vec<C64>,
    pub toeplitz: HermitianToeplitz,
    pub t: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub converged: bool,
    /// Objective evaluated at the PSD iterate `Z` after every iteration.
    pub merit_history: Vec<f64>,
    /// Penalty parameter after the last balancing step.
    pub rho: f64,
}

impl AnmSolution {
    pub fn objective(&self, problem: &AnmProblem) -> f64 {
        problem.objective(self.toeplitz.trace(), &self.g, self.t)
    }

    /// `[[T, g], [g^H, t]]`.
    pub fn bordered(&self) -> Mat<C64> {
        bordered(&self.toeplitz, &self.g, self.t)
    }

    /// Smallest eigenvalue of the bordered matrix.
    pub fn min_bordered_eigenvalue(&self) -> Result<f64> {
        Ok(linalg::hermitian_eigenvalues(self.bordered().as_ref())?[0])
    }
}

fn bordered(toeplitz: &HermitianToeplitz, g: &[C64], t: f64) -> Mat<C64> {
    let n = toeplitz.dim();
    Mat::from_fn(n + 1, n + 1, |i, j| match (i == n, j == n) {
        (false, false) => toeplitz.entry(i, j),
        (false, true) => g[i],
        (true, false) => g[j].conj(),
        (true, true) => C64::new(t, 0.0),
    })
}

/// `sigma * sqrt(2N ln 2N)`; the noiseless fallback when `sigma == 0`.
pub fn default_lambda(sigma: f64, n: usize) -> Result<f64> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidParameter(format!("noise level must be non-negative, got {sigma}")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("N must be at least 1".into()));
    }
    if sigma == 0.0 {
        return Ok(DEFAULT_NOISELESS_LAMBDA);
    }
    let m = 2.0 * n as f64;
    Ok(sigma * (m * m.ln()).sqrt())
}

/// Sum of atom magnitudes for a decomposition `g = sum_i H_i e(tau_i)`
/// known to hold; an upper bound on the atomic norm of `g`.
pub fn atomic_norm_exact(g: &[C64], atoms: &[(C64, f64)]) -> Result<f64> {
    let mut rec = vec![C64::new(0.0, 0.0); g.len()];
    for &(h, tau) in atoms {
        for (r, e) in rec.iter_mut().zip(steering_vector(tau, g.len())) {
            *r += h * e;
        }
    }
    let residual = g
        .iter()
        .zip(&rec)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if residual > 1e-9 {
        return Err(Error::InconsistentDecomposition { residual });
    }
    Ok(atoms.iter().map(|(h, _)| h.norm()).sum())
}

/// Runs ADMM until both residuals fall below `params.tolerance` or the
/// iteration cap is hit; in the latter case `converged` is false.
pub fn solve(problem: &AnmProblem) -> Result<AnmSolution> {
    problem.validate()?;
    let n = problem.dim();
    let params = problem.params;
    let lambda = problem.lambda;
    let trace_weight = 1.0 / (2.0 * n as f64);

    let mut rho = params.rho;
    let mut z = Mat::<C64>::zeros(n + 1, n + 1);
    let mut dual = Mat::<C64>::zeros(n + 1, n + 1);

    let fidelity_rhs: Vec<C64> = problem
        .x
        .iter()
        .zip(&problem.y)
        .map(|(x, y)| lambda * x.conj() * y)
        .collect();
    let fidelity_diag: Vec<f64> = problem.x.iter().map(|x| lambda * x.norm_sqr()).collect();

    let mut g = vec![C64::new(0.0, 0.0); n];
    let mut t = 0.0;
    let mut toeplitz = HermitianToeplitz::zeros(n);
    let mut primal = f64::INFINITY;
    let mut dual_res = f64::INFINITY;
    let mut merit_history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_iter {
        iterations += 1;

        for k in 0..n {
            g[k] = (fidelity_rhs[k] + rho * z[(k, n)] - dual[(k, n)]) / (fidelity_diag[k] + rho);
        }
        t = z[(n, n)].re - (dual[(n, n)].re + 0.5) / rho;
        let target = Mat::<C64>::from_fn(n, n, |i, j| {
            let shift = if i == j { trace_weight } else { 0.0 };
            z[(i, j)] - (dual[(i, j)] + shift) / rho
        });
        toeplitz = HermitianToeplitz::project(target.as_ref());

        let theta = bordered(&toeplitz, &g, t);
        let v = Mat::<C64>::from_fn(n + 1, n + 1, |i, j| theta[(i, j)] + dual[(i, j)] / rho);
        let z_next = linalg::psd_projection(v.as_ref())?;

        let gap = &theta - &z_next;
        primal = linalg::frobenius(gap.as_ref());
        dual_res = rho * linalg::frobenius((&z_next - &z).as_ref());
        dual += rho * &gap;
        z = z_next;

        let z_trace: f64 = (0..n).map(|i| z[(i, i)].re).sum();
        let z_g: Vec<C64> = (0..n).map(|i| z[(i, n)]).collect();
        merit_history.push(problem.objective(z_trace, &z_g, z[(n, n)].re));

        if !(primal.is_finite() && dual_res.is_finite()) {
            return Err(Error::Numerical(format!("ADMM diverged at iteration {iterations}")));
        }
        if primal < params.tolerance && dual_res < params.tolerance {
            converged = true;
            break;
        }
        if params.balance_ratio > 0.0 {
            if primal > params.balance_ratio * dual_res {
                rho *= params.balance_factor;
            } else if dual_res > params.balance_ratio * primal {
                rho /= params.balance_factor;
            }
        }
    }
    log::debug!(
        "ADMM: {iterations} iterations, primal {primal:.2e}, dual {dual_res:.2e}, converged {converged}"
    );
    Ok(AnmSolution {
        g,
        toeplitz,
        t,
        iterations,
        primal_residual: primal,
        dual_residual: dual_res,
        converged,
        merit_history,
        rho,
    })
}
