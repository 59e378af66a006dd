//! Dense multivariate normal kernels. All covariance algebra goes through
//! Cholesky factors; nothing here forms an explicit inverse.

use std::f64::consts::{LN_2, PI};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng;

const SYMMETRY_TOL: f64 = 1e-10;

/// `ln(2π)`.
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Lower-triangular `L` with `L L^T = cov`.
pub fn cholesky(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    if cov.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: cov.ncols(),
        });
    }
    let scale = cov.amax().max(1.0);
    for i in 0..n {
        for j in 0..i {
            if !((cov[(i, j)] - cov[(j, i)]).abs() <= SYMMETRY_TOL * scale) {
                return Err(Error::NotSymmetric);
            }
        }
    }
    let mut l = DMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = cov[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { row: j, pivot });
        }
        let diag = pivot.sqrt();
        l[(j, j)] = diag;
        for i in (j + 1)..n {
            let mut s = cov[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / diag;
        }
    }
    Ok(l)
}

/// Solves `L x = b` in place for lower-triangular `L`.
pub(crate) fn forward_solve(l: &DMatrix<f64>, b: &mut DVector<f64>) {
    let n = l.nrows();
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Mean and covariance of a multivariate normal, with the covariance
/// factor cached.
#[derive(Debug, Clone, PartialEq)]
pub struct MvnParams {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    chol: DMatrix<f64>,
}

impl MvnParams {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        if cov.nrows() != mean.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: cov.nrows(),
            });
        }
        let chol = cholesky(&cov)?;
        Ok(Self { mean, cov, chol })
    }

    /// Builds the parameters from a lower-triangular factor with positive
    /// diagonal. The covariance is `L L^T` exactly as computed here.
    pub fn from_cholesky(mean: DVector<f64>, chol: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if chol.nrows() != d || chol.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: chol.nrows(),
            });
        }
        for j in 0..d {
            let pivot = chol[(j, j)];
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::NotPositiveDefinite { row: j, pivot });
            }
        }
        let cov = &chol * chol.transpose();
        Ok(Self { mean, cov, chol })
    }

    /// Convenience constructor from row-major slices.
    pub fn from_slices(mean: &[f64], cov_rows: &[&[f64]]) -> Result<Self> {
        let d = mean.len();
        let mut cov = DMatrix::zeros(d, cov_rows.len());
        for (i, row) in cov_rows.iter().enumerate() {
            if row.len() != d || i >= d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                cov[(i, j)] = v;
            }
        }
        Self::new(DVector::from_column_slice(mean), cov)
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn cholesky_factor(&self) -> &DMatrix<f64> {
        &self.chol
    }

    /// `log |Σ|` from the factor's pivots.
    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.diagonal().iter().map(|p| p.ln()).sum::<f64>()
    }

    /// `(y - μ)^T Σ^{-1} (y - μ)`.
    pub fn mahalanobis_sq(&self, y: &DVector<f64>) -> f64 {
        let mut r = y - &self.mean;
        forward_solve(&self.chol, &mut r);
        r.norm_squared()
    }

    /// `μ + L z`.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.mean + &self.chol * z
    }
}

pub fn mvn_logpdf(y: &DVector<f64>, params: &MvnParams) -> Result<f64> {
    if y.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            found: y.len(),
        });
    }
    Ok(logpdf_unchecked(y, params))
}

pub(crate) fn logpdf_unchecked(y: &DVector<f64>, params: &MvnParams) -> f64 {
    let d = params.dim() as f64;
    -0.5 * (d * LN_2PI + params.log_det()) - 0.5 * params.mahalanobis_sq(y)
}

/// `n` draws from the normal with the given parameters. Draws are produced
/// chunk by chunk as described in [`crate::rng`]; the output depends only on
/// `seed`.
pub fn mvn_sample(n: usize, params: &MvnParams, seed: u64) -> Vec<DVector<f64>> {
    let draw_chunk = |(k, (_, len)): (usize, (usize, usize))| {
        let mut rng = rng::stream_rng(seed, k as u64);
        (0..len).map(|_| params.sample_with(&mut rng)).collect::<Vec<_>>()
    };
    let chunks: Vec<(usize, (usize, usize))> = rng::chunks(n).enumerate().collect();
    #[cfg(feature = "parallel")]
    let parts: Vec<Vec<DVector<f64>>> = {
        use rayon::prelude::*;
        chunks.into_par_iter().map(draw_chunk).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<Vec<DVector<f64>>> = chunks.into_iter().map(draw_chunk).collect();
    parts.into_iter().flatten().collect()
}

/// Rotated normal split into the marginal of coordinates `2..d` and the
/// conditional of coordinate 1 given the others are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalSplit {
    pub marginal_mean: DVector<f64>,
    pub marginal_cov: DMatrix<f64>,
    pub cond_mean_at_zero: f64,
    pub cond_var: f64,
}

/// Conditional-normal identities applied at `z_{-1} = 0`.
///
/// For `d = 1` the marginal is empty and the conditional is the normal
/// itself.
pub fn conditional_split(params_rotated: &MvnParams) -> Result<ConditionalSplit> {
    let d = params_rotated.dim();
    let mu = params_rotated.mean();
    let s = params_rotated.cov();
    if d == 0 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    let marginal_mean = mu.rows(1, d - 1).into_owned();
    let marginal_cov = s.view((1, 1), (d - 1, d - 1)).into_owned();
    if d == 1 {
        return Ok(ConditionalSplit {
            marginal_mean,
            marginal_cov,
            cond_mean_at_zero: mu[0],
            cond_var: s[(0, 0)],
        });
    }
    let l = cholesky(&marginal_cov)?;
    // Whitened cross-covariance and mean: L^{-1} Σ[-1,1], L^{-1} μ[-1].
    let mut cross = s.view((1, 0), (d - 1, 1)).column(0).into_owned();
    forward_solve(&l, &mut cross);
    let mut mean_w = marginal_mean.clone();
    forward_solve(&l, &mut mean_w);
    Ok(ConditionalSplit {
        cond_mean_at_zero: mu[0] - cross.dot(&mean_w),
        cond_var: s[(0, 0)] - cross.norm_squared(),
        marginal_mean,
        marginal_cov,
    })
}

/// `log(1 - Φ(a))` for the standard normal CDF `Φ`.
///
/// Uses `erfc` directly where it is representable and the Mills-ratio
/// expansion beyond that, so large positive `a` never goes through `1 - Φ`.
pub fn std_normal_log_tail(a: f64) -> f64 {
    if a.is_nan() {
        return f64::NAN;
    }
    if a == f64::INFINITY {
        return f64::NEG_INFINITY;
    }
    if a < -1.0 {
        // 1 - Φ(a) = 1 - Φ(-|a|) is close to one; keep the small part exact.
        return (-0.5 * libm::erfc(-a / std::f64::consts::SQRT_2)).ln_1p();
    }
    if a < 37.0 {
        return libm::erfc(a / std::f64::consts::SQRT_2).ln() - LN_2;
    }
    let inv2 = 1.0 / (a * a);
    let series = 1.0 - inv2 * (1.0 - 3.0 * inv2 * (1.0 - 5.0 * inv2 * (1.0 - 7.0 * inv2)));
    -0.5 * a * a - a.ln() - 0.5 * (2.0 * PI).ln() + series.ln()
}
