//! The zero-censored log-likelihood and its maximization.
//!
//! Interior points contribute the normal log-density of their transformed
//! coordinates. A face point `y` is the image of every latent point on the
//! ray `{t ŷ : t ≥ |y|}`, so it contributes the line integral of the density
//! along that ray. Rotating `ŷ` onto the first axis turns the integral into
//! the marginal density of the remaining coordinates at zero times a normal
//! upper tail probability.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{conditional_split, forward_solve, logpdf_unchecked, std_normal_log_tail, MvnParams, LN_2PI};
use crate::optimize::{minimize, MinimizeConfig, StopReason, TracePoint};
use crate::sample::{FacePoint, TransformedSample};
use crate::simplex::log_jacobian_alpha_one;

/// Bound on the log-diagonal coordinates of the packed Cholesky factor.
pub const LOG_DIAG_BOUND: f64 = 30.0;

/// Log of the censoring line integral for one face point.
pub fn boundary_term(face: &FacePoint, params: &MvnParams) -> Result<f64> {
    let d = params.dim();
    if face.y.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: face.y.len(),
        });
    }
    let rotated = MvnParams::new(
        face.rotation.apply(params.mean()),
        symmetrize(face.rotation.conjugate(params.cov())),
    )?;
    let split = conditional_split(&rotated)?;
    let marginal = if d > 1 {
        let m = MvnParams::new(split.marginal_mean, split.marginal_cov)?;
        logpdf_unchecked(&DVector::zeros(d - 1), &m)
    } else {
        0.0
    };
    let z = (face.radius - split.cond_mean_at_zero) / split.cond_var.sqrt();
    Ok(marginal + std_normal_log_tail(z))
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Full log-likelihood including the α = 1 Jacobian constant
/// `(n d + n/2) log D`.
///
/// Terms are accumulated sequentially: interior points in order, then face
/// points in order, then the constant.
pub fn log_likelihood(sample: &TransformedSample, params: &MvnParams) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let d = sample.dim();
    if params.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: params.dim(),
        });
    }
    if sample.n_interior() < d + 1 {
        log::warn!(
            "{} interior points do not identify a {d}-dimensional covariance",
            sample.n_interior()
        );
    }
    let mut total = 0.0;
    for y in sample.interior() {
        total += logpdf_unchecked(y, params);
    }
    for f in sample.face() {
        total += boundary_term(f, params)?;
    }
    Ok(total + sample.len() as f64 * log_jacobian_alpha_one(sample.parts()))
}

/// Packed unconstrained parameters: the mean, then the rows of the lower
/// Cholesky factor of Σ with each diagonal entry stored as its logarithm.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    dim: usize,
    packed: Vec<f64>,
}

impl ParamVector {
    pub fn len_for(dim: usize) -> usize {
        dim + dim * (dim + 1) / 2
    }

    pub fn pack(params: &MvnParams) -> Self {
        let d = params.dim();
        let l = params.cholesky_factor();
        let mut packed = Vec::with_capacity(Self::len_for(d));
        packed.extend(params.mean().iter());
        for i in 0..d {
            for j in 0..i {
                packed.push(l[(i, j)]);
            }
            packed.push(l[(i, i)].ln());
        }
        Self { dim: d, packed }
    }

    pub fn from_packed(dim: usize, packed: Vec<f64>) -> Result<Self> {
        if packed.len() != Self::len_for(dim) {
            return Err(Error::DimensionMismatch {
                expected: Self::len_for(dim),
                found: packed.len(),
            });
        }
        Ok(Self { dim, packed })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.packed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn unpack(&self) -> Result<MvnParams> {
        unpack_slice(self.dim, &self.packed)
    }
}

fn unpack_slice(d: usize, packed: &[f64]) -> Result<MvnParams> {
    let mean = DVector::from_column_slice(&packed[..d]);
    let mut l = DMatrix::zeros(d, d);
    let mut k = d;
    for i in 0..d {
        for j in 0..i {
            l[(i, j)] = packed[k];
            k += 1;
        }
        let v = packed[k];
        if !(v.abs() <= LOG_DIAG_BOUND) {
            return Err(Error::LogDiagonalBound { index: k, value: v });
        }
        l[(i, i)] = v.exp();
        k += 1;
    }
    MvnParams::from_cholesky(mean, l)
}

/// Sufficient statistics of the interior points plus the face points, for
/// repeated evaluation during fitting.
struct LikelihoodCache<'a> {
    sample: &'a TransformedSample,
    interior_mean: DVector<f64>,
    /// Scatter of the interior points about their mean.
    interior_scatter: DMatrix<f64>,
    constant: f64,
}

impl<'a> LikelihoodCache<'a> {
    fn new(sample: &'a TransformedSample) -> Self {
        let d = sample.dim();
        let n1 = sample.n_interior();
        let mut mean = DVector::zeros(d);
        for y in sample.interior() {
            mean += y;
        }
        if n1 > 0 {
            mean /= n1 as f64;
        }
        let mut scatter = DMatrix::zeros(d, d);
        for y in sample.interior() {
            let r = y - &mean;
            scatter += &r * r.transpose();
        }
        Self {
            sample,
            interior_mean: mean,
            interior_scatter: scatter,
            constant: sample.len() as f64 * log_jacobian_alpha_one(sample.parts()),
        }
    }

    fn log_likelihood(&self, params: &MvnParams) -> Result<f64> {
        let d = params.dim();
        let n1 = self.sample.n_interior() as f64;
        let l = params.cholesky_factor();
        let mut interior = 0.0;
        if n1 > 0.0 {
            // tr(Σ^{-1} S) = tr(L^{-1} S L^{-T}).
            let mut w = self.interior_scatter.clone();
            for mut col in w.column_iter_mut() {
                let mut c = col.clone_owned();
                forward_solve(l, &mut c);
                col.copy_from(&c);
            }
            let mut wt = w.transpose();
            let mut trace = 0.0;
            for (j, mut col) in wt.column_iter_mut().enumerate() {
                let mut c = col.clone_owned();
                forward_solve(l, &mut c);
                trace += c[j];
                col.copy_from(&c);
            }
            let mut r = &self.interior_mean - params.mean();
            forward_solve(l, &mut r);
            interior = -0.5 * n1 * (d as f64 * LN_2PI + params.log_det())
                - 0.5 * (trace + n1 * r.norm_squared());
        }
        let mut boundary = 0.0;
        for f in self.sample.face() {
            boundary += boundary_term(f, params)?;
        }
        Ok(interior + boundary + self.constant)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub max_iter: usize,
    /// Gradient ∞-norm tolerance on the log-likelihood.
    pub grad_tol: f64,
    /// Relative log-likelihood change that ends the search once the gradient
    /// ∞-norm is below `stall_grad_tol`.
    pub rel_tol: f64,
    /// Largest gradient ∞-norm accepted as converged when the search ends
    /// without meeting `grad_tol`.
    pub stall_grad_tol: f64,
    pub fd_step: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            grad_tol: 1e-6,
            rel_tol: 1e-10,
            stall_grad_tol: 1e-4,
            fd_step: 1e-6,
        }
    }
}

/// Maximum-likelihood estimates of the zero-censored model.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Gradient ∞-norm of the log-likelihood at the returned point.
    pub gradient_norm: f64,
    pub stop: StopReason,
    /// Number of parts D of the modelled compositions.
    pub parts: usize,
    pub n_interior: usize,
    pub n_face: usize,
    /// Log-likelihood and gradient norm per accepted iteration.
    pub trace: Vec<TracePoint>,
}

impl FittedModel {
    pub fn params(&self) -> Result<MvnParams> {
        MvnParams::new(self.mean.clone(), self.cov.clone())
    }

    pub fn to_document(&self) -> ModelDocument {
        ModelDocument {
            parts: self.parts,
            n_interior: Some(self.n_interior),
            n_face: Some(self.n_face),
            mean: self.mean.iter().copied().collect(),
            covariance: matrix_rows(&self.cov),
            loglik: Some(self.loglik),
            converged: Some(self.converged),
            iterations: Some(self.iterations),
            gradient_norm: Some(self.gradient_norm),
            seed: None,
            components: None,
        }
    }
}

pub(crate) fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// JSON form of a model. Only `D`, `mean` and `covariance` are required when
/// reading; a document written by `fit` carries every field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    #[serde(rename = "D")]
    pub parts: usize,
    #[serde(rename = "n1", default, skip_serializing_if = "Option::is_none")]
    pub n_interior: Option<usize>,
    #[serde(rename = "n2", default, skip_serializing_if = "Option::is_none")]
    pub n_face: Option<usize>,
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loglik: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converged: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient_norm: Option<f64>,
    /// Seed of the simulation that produced the fitted data, when known.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<String>>,
}

impl ModelDocument {
    pub fn from_params(parts: usize, params: &MvnParams) -> Self {
        Self {
            parts,
            n_interior: None,
            n_face: None,
            mean: params.mean().iter().copied().collect(),
            covariance: matrix_rows(params.cov()),
            loglik: None,
            converged: None,
            iterations: None,
            gradient_norm: None,
            seed: None,
            components: None,
        }
    }

    pub fn params(&self) -> Result<MvnParams> {
        let d = self.mean.len();
        if self.parts != d + 1 {
            return Err(Error::DimensionMismatch {
                expected: self.parts.saturating_sub(1),
                found: d,
            });
        }
        let rows: Vec<&[f64]> = self.covariance.iter().map(|r| r.as_slice()).collect();
        if rows.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: rows.len(),
            });
        }
        MvnParams::from_slices(&self.mean, &rows)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model document serializes")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Starting point: mean and covariance of every transformed point, with a
/// small ridge if the covariance is not positive definite.
pub fn initial_params(sample: &TransformedSample) -> Result<MvnParams> {
    let (mean, cov) = sample.moments()?;
    let d = sample.dim();
    match MvnParams::new(mean.clone(), cov.clone()) {
        Ok(p) => Ok(p),
        Err(_) => MvnParams::new(mean, cov + DMatrix::identity(d, d) * 1e-8),
    }
}

/// Maximizes [`log_likelihood`] over `(μ, Σ)`.
///
/// Runs BFGS on the per-observation negative log-likelihood in the packed
/// log-Cholesky coordinates of [`ParamVector`]. Hitting the iteration limit
/// is not an error: the model comes back with `converged = false`.
pub fn fit(sample: &TransformedSample, config: &FitConfig) -> Result<FittedModel> {
    let d = sample.dim();
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if sample.n_interior() < d + 1 {
        return Err(Error::TooFewInterior {
            n_interior: sample.n_interior(),
            dim: d,
        });
    }
    let start = ParamVector::pack(&initial_params(sample)?);
    fit_from(sample, start, config)
}

/// [`fit`] from an explicit starting point.
pub fn fit_from(
    sample: &TransformedSample,
    start: ParamVector,
    config: &FitConfig,
) -> Result<FittedModel> {
    let d = sample.dim();
    if start.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: start.dim(),
        });
    }
    let cache = LikelihoodCache::new(sample);
    let n = sample.len() as f64;
    let objective = |theta: &[f64]| -> Result<f64> {
        let params = unpack_slice(d, theta)?;
        Ok(-cache.log_likelihood(&params)? / n)
    };
    let min_config = MinimizeConfig {
        max_iter: config.max_iter,
        grad_tol: config.grad_tol / n,
        rel_tol: config.rel_tol,
        rel_grad_tol: config.stall_grad_tol / n,
        fd_step: config.fd_step,
    };
    let result = minimize(objective, start.as_slice(), &min_config)?;
    let params = unpack_slice(d, &result.x)?;
    let gradient_norm = result.grad_norm() * n;
    let converged = match result.stop {
        StopReason::Gradient => true,
        StopReason::RelativeChange | StopReason::Stalled => gradient_norm < config.stall_grad_tol,
        StopReason::MaxIterations => false,
    };
    let trace = result
        .trace
        .iter()
        .map(|t| TracePoint {
            iteration: t.iteration,
            value: -t.value * n,
            grad_norm: t.grad_norm * n,
        })
        .collect();
    Ok(FittedModel {
        loglik: log_likelihood(sample, &params)?,
        mean: params.mean().clone(),
        cov: params.cov().clone(),
        iterations: result.iterations,
        converged,
        gradient_norm,
        stop: result.stop,
        parts: sample.parts(),
        n_interior: sample.n_interior(),
        n_face: sample.n_face(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::Composition;
    use crate::sample::CompositionalDataset;
    use std::f64::consts::PI;

    fn small_sample() -> TransformedSample {
        let rows = [
            [0.2, 0.3, 0.5],
            [0.3, 0.3, 0.4],
            [0.25, 0.15, 0.6],
            [0.1, 0.5, 0.4],
            [0.0, 0.45, 0.55],
            [0.6, 0.4, 0.0],
        ];
        let comps = rows.iter().map(|r| Composition::new(r.to_vec()).unwrap()).collect();
        TransformedSample::from_dataset(&CompositionalDataset::new(3, comps).unwrap()).unwrap()
    }

    #[test]
    fn isotropic_boundary_term() {
        let sample = small_sample();
        let p = MvnParams::new(DVector::zeros(2), DMatrix::identity(2, 2)).unwrap();
        for f in sample.face() {
            let got = boundary_term(f, &p).unwrap();
            let want = -0.5 * (2.0 * PI).ln() + std_normal_log_tail(f.radius);
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn pack_round_trip() {
        let p = MvnParams::from_slices(&[0.3, -0.2], &[&[0.5, 0.1], &[0.1, 2.0]]).unwrap();
        let back = ParamVector::pack(&p).unpack().unwrap();
        assert!((back.cov() - p.cov()).amax() < 1e-12);
        assert!((back.mean() - p.mean()).amax() < 1e-15);
    }

    #[test]
    fn log_diagonal_bound() {
        let v = ParamVector::from_packed(1, vec![0.0, 31.0]).unwrap();
        assert!(matches!(v.unpack(), Err(Error::LogDiagonalBound { .. })));
    }

    #[test]
    fn cache_matches_direct_sum() {
        let sample = small_sample();
        let cache = LikelihoodCache::new(&sample);
        let p = MvnParams::from_slices(&[0.1, -0.3], &[&[0.4, 0.05], &[0.05, 0.3]]).unwrap();
        let a = cache.log_likelihood(&p).unwrap();
        let b = log_likelihood(&sample, &p).unwrap();
        assert!((a - b).abs() < 1e-10 * b.abs(), "{a} vs {b}");
    }

    #[test]
    fn zero_free_reduces_to_mvn() {
        let sample = small_sample();
        let interior_only =
            TransformedSample::from_parts(3, sample.interior().to_vec(), Vec::new()).unwrap();
        let p = MvnParams::from_slices(&[0.0, 0.1], &[&[1.0, 0.2], &[0.2, 0.5]]).unwrap();
        let want: f64 = interior_only
            .interior()
            .iter()
            .map(|y| crate::gaussian::mvn_logpdf(y, &p).unwrap())
            .sum::<f64>()
            + (4.0 * 2.0 + 2.0) * 3f64.ln();
        assert!((log_likelihood(&interior_only, &p).unwrap() - want).abs() < 1e-10);
    }

    #[test]
    fn fit_rejects_underidentified() {
        let sample = small_sample();
        let few = TransformedSample::from_parts(3, sample.interior()[..2].to_vec(), Vec::new())
            .unwrap();
        assert!(matches!(
            fit(&few, &FitConfig::default()),
            Err(Error::TooFewInterior { n_interior: 2, dim: 2 })
        ));
    }

    #[test]
    fn fit_ascends() {
        let sample = small_sample();
        let init = initial_params(&sample).unwrap();
        let start = log_likelihood(&sample, &init).unwrap();
        let m = fit(&sample, &FitConfig::default()).unwrap();
        assert!(m.loglik >= start);
        assert!(m.converged, "{:?}", m.stop);
        assert!(m.trace.windows(2).all(|w| w[1].value >= w[0].value - 1e-12));
    }

    #[test]
    fn document_round_trip() {
        let sample = small_sample();
        let m = fit(&sample, &FitConfig::default()).unwrap();
        let doc = m.to_document();
        let text = doc.to_json();
        assert!(text.contains("\"D\": 3"));
        assert!(text.contains("\"covariance\""));
        let back = ModelDocument::from_json(&text).unwrap();
        assert_eq!(back, doc);
        let p = back.params().unwrap();
        assert!((p.cov() - &m.cov).amax() < 1e-15);
        let minimal = r#"{"D": 3, "mean": [0.625, 0.821], "covariance": [[0.149, -0.2], [-0.2, 1.523]]}"#;
        let doc = ModelDocument::from_json(minimal).unwrap();
        assert_eq!(doc.params().unwrap().dim(), 2);
    }
}
