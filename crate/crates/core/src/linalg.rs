//! Dense complex linear algebra on top of faer, plus a Hermitian Toeplitz
//! type stored by its first column.

use faer::linalg::solvers::Solve;
use faer::{Mat, MatRef, Side};

use crate::error::{Error, Result};
use crate::C64;

pub(crate) fn numerical(what: &str) -> impl FnOnce(faer::linalg::evd::EvdError) -> Error + '_ {
    move |e| Error::Numerical(format!("{what}: {e:?}"))
}

/// Eigen-decomposition of a Hermitian matrix (lower triangle is read).
/// Eigenvalues are nondecreasing; columns of the second value are the
/// matching unit eigenvectors.
pub fn hermitian_eigen(a: MatRef<'_, C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    let evd = a
        .self_adjoint_eigen(Side::Lower)
        .map_err(numerical("Hermitian eigendecomposition"))?;
    let values = evd.S().column_vector().iter().map(|v| v.re).collect();
    Ok((values, evd.U().to_owned()))
}

pub fn hermitian_eigenvalues(a: MatRef<'_, C64>) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(numerical("Hermitian eigenvalues"))
}

/// Nearest PSD matrix in Frobenius norm: eigenvalues below zero are clipped.
/// The correction is assembled from whichever eigenvalue sign class is
/// smaller, so the cost beyond the eigendecomposition is
/// `O(n^2 min(p, n - p))` for `p` positive eigenvalues.
pub fn psd_projection(a: MatRef<'_, C64>) -> Result<Mat<C64>> {
    let (values, vectors) = hermitian_eigen(a)?;
    let n = a.nrows();
    let first = values.iter().position(|&v| v > 0.0).unwrap_or(n);
    let positive = n - first;
    if positive == 0 {
        return Ok(Mat::zeros(n, n));
    }
    if positive <= first {
        let scaled = Mat::<C64>::from_fn(n, positive, |i, j| vectors[(i, first + j)] * values[first + j].sqrt());
        return Ok(&scaled * scaled.adjoint());
    }
    // a - sum over negative eigenpairs, with the Hermitian part of `a`.
    let scaled = Mat::<C64>::from_fn(n, first, |i, j| vectors[(i, j)] * (-values[j]).sqrt());
    let correction = &scaled * scaled.adjoint();
    Ok(Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)].conj()) + correction[(i, j)]))
}

/// Eigenvalues of a general square complex matrix.
pub fn eigenvalues(a: MatRef<'_, C64>) -> Result<Vec<C64>> {
    a.eigenvalues().map_err(numerical("eigenvalues"))
}

/// 2-norm condition number; infinite for singular matrices.
pub fn condition_number(a: MatRef<'_, C64>) -> Result<f64> {
    let s = a
        .singular_values()
        .map_err(|e| Error::Numerical(format!("singular values: {e:?}")))?;
    let (max, min) = (s[0], s[s.len() - 1]);
    Ok(if min > 0.0 { max / min } else { f64::INFINITY })
}

/// Solves `a x = b` with a partially pivoted LU when `cond(a) <= cond_limit`
/// and with the SVD pseudo-inverse otherwise. Returns the condition number.
pub fn solve_or_pinv(a: MatRef<'_, C64>, b: MatRef<'_, C64>, cond_limit: f64) -> Result<(Mat<C64>, f64)> {
    let cond = condition_number(a)?;
    let x = if cond <= cond_limit {
        a.partial_piv_lu().solve(b)
    } else {
        let svd = a
            .svd()
            .map_err(|e| Error::Numerical(format!("svd: {e:?}")))?;
        svd.pseudoinverse() * b
    };
    Ok((x, cond))
}

/// Solves `a x = b`, refusing when `cond(a) > cond_limit`.
pub fn solve_checked(a: MatRef<'_, C64>, b: MatRef<'_, C64>, cond_limit: f64) -> Result<(Mat<C64>, f64)> {
    let cond = condition_number(a)?;
    if cond.is_nan() || cond > cond_limit {
        return Err(Error::IllConditioned(cond));
    }
    Ok((a.partial_piv_lu().solve(b), cond))
}

pub fn frobenius(a: MatRef<'_, C64>) -> f64 {
    a.norm_l2()
}

pub fn column(v: &[C64]) -> Mat<C64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian Toeplitz matrix `T[i][j] = u[i-j]` for `i >= j` and
/// `conj(u[j-i])` above the diagonal. `u[0]` is real.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianToeplitz {
    first_column: Vec<C64>,
}

impl HermitianToeplitz {
    /// The imaginary part of `u[0]` is discarded.
    pub fn new(mut first_column: Vec<C64>) -> Self {
        if let Some(d) = first_column.first_mut() {
            d.im = 0.0;
        }
        Self { first_column }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![C64::new(0.0, 0.0); n])
    }

    pub fn dim(&self) -> usize {
        self.first_column.len()
    }

    pub fn first_column(&self) -> &[C64] {
        &self.first_column
    }

    pub fn trace(&self) -> f64 {
        self.dim() as f64 * self.first_column.first().map_or(0.0, |d| d.re)
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        if i >= j {
            self.first_column[i - j]
        } else {
            self.first_column[j - i].conj()
        }
    }

    pub fn to_dense(&self) -> Mat<C64> {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| self.entry(i, j))
    }

    /// Orthogonal projection of the Hermitian part of `a` onto Hermitian
    /// Toeplitz matrices: averages each sub-diagonal.
    pub fn project(a: MatRef<'_, C64>) -> Self {
        let n = a.nrows();
        let u = (0..n)
            .map(|k| {
                let sum: C64 = (k..n).map(|i| a[(i, i - k)] + a[(i - k, i)].conj()).sum();
                sum / (2 * (n - k)) as f64
            })
            .collect();
        Self::new(u)
    }

    /// `sum_i w_i e(tau_i) e(tau_i)^H` with `e(tau)[n] = exp(j 2 pi n tau)`.
    pub fn from_atoms(n: usize, atoms: &[(f64, f64)]) -> Self {
        let u = (0..n)
            .map(|k| {
                atoms
                    .iter()
                    .map(|&(w, tau)| C64::from_polar(w, std::f64::consts::TAU * k as f64 * tau))
                    .sum()
            })
            .collect();
        Self::new(u)
    }
}

/// Largest within-diagonal standard deviation of `a`; zero for an exact
/// Toeplitz matrix.
pub fn toeplitz_deviation(a: MatRef<'_, C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for k in -(n as isize - 1)..n as isize {
        let entries: Vec<C64> = (0..n)
            .filter_map(|i| {
                let j = i as isize - k;
                (0..n as isize).contains(&j).then(|| a[(i, j as usize)])
            })
            .collect();
        let mean: C64 = entries.iter().sum::<C64>() / entries.len() as f64;
        let var = entries.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / entries.len() as f64;
        worst = worst.max(var.sqrt());
    }
    worst
}
