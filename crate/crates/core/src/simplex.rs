//! Compositions, the Helmert sub-matrix and the α-transformation family.
//!
//! The model itself only ever uses α = 1, where the transformation is the
//! affine map `y = H (D x - 1)` from the simplex into `R^(D-1)`. The general
//! exponent is kept so the Jacobians can be checked over a range of α.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on the unit-sum constraint of an accepted composition.
pub const UNIT_SUM_TOL: f64 = 1e-10;

/// Inputs off the unit sum by at most this much are re-closed with a warning.
pub const RECLOSE_TOL: f64 = 1e-6;

/// A point of the D-part simplex with at most one zero part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Composition {
    parts: Vec<f64>,
}

impl Composition {
    /// Validates `parts` as a composition.
    ///
    /// Sums within [`UNIT_SUM_TOL`] of one are accepted as-is, sums within
    /// [`RECLOSE_TOL`] are re-closed with a warning, anything further off is
    /// rejected.
    pub fn new(parts: Vec<f64>) -> Result<Self> {
        check_parts(&parts)?;
        let sum: f64 = parts.iter().sum();
        let err = (sum - 1.0).abs();
        if err <= UNIT_SUM_TOL {
            Ok(Self { parts })
        } else if err <= RECLOSE_TOL {
            log::warn!("composition sums to {sum}; re-closing");
            Ok(Self {
                parts: parts.iter().map(|p| p / sum).collect(),
            })
        } else {
            Err(Error::NotUnitSum { sum })
        }
    }

    /// Builds a composition whose parts are known to be valid.
    pub(crate) fn from_parts_unchecked(parts: Vec<f64>) -> Self {
        debug_assert!((parts.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        Self { parts }
    }

    pub fn parts(&self) -> &[f64] {
        &self.parts
    }

    /// Number of parts, D.
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Index of the zero part, if there is one.
    pub fn zero_index(&self) -> Option<usize> {
        self.parts.iter().position(|&p| p == 0.0)
    }

    pub fn is_interior(&self) -> bool {
        self.zero_index().is_none()
    }

    pub fn into_parts(self) -> Vec<f64> {
        self.parts
    }
}

impl TryFrom<Vec<f64>> for Composition {
    type Error = Error;

    fn try_from(parts: Vec<f64>) -> Result<Self> {
        Self::new(parts)
    }
}

impl From<Composition> for Vec<f64> {
    fn from(c: Composition) -> Self {
        c.parts
    }
}

fn check_parts(parts: &[f64]) -> Result<()> {
    if parts.len() < 2 {
        return Err(Error::TooFewParts(parts.len()));
    }
    let mut zeros = 0;
    for (index, &value) in parts.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite(index));
        }
        if value < 0.0 {
            return Err(Error::NegativePart { index, value });
        }
        if value == 0.0 {
            zeros += 1;
        }
    }
    if zeros == parts.len() {
        return Err(Error::AllZero);
    }
    if zeros > 1 {
        return Err(Error::MultipleZeros { count: zeros });
    }
    Ok(())
}

/// Normalizes raw non-negative amounts (hours, counts, masses) to proportions.
pub fn closure(raw: &[f64]) -> Result<Composition> {
    check_parts(raw)?;
    let sum: f64 = raw.iter().sum();
    Ok(Composition {
        parts: raw.iter().map(|r| r / sum).collect(),
    })
}

/// The (D-1) x D Helmert sub-matrix: orthonormal rows, each orthogonal to
/// the all-ones vector.
///
/// Row `i` (0-based) holds `1/sqrt((i+1)(i+2))` in columns `0..=i` and
/// `-(i+1)/sqrt((i+1)(i+2))` in column `i+1`.
#[derive(Debug, Clone, PartialEq)]
pub struct HelmertSubMatrix {
    entries: DMatrix<f64>,
}

impl HelmertSubMatrix {
    pub fn new(parts: usize) -> Result<Self> {
        if parts < 2 {
            return Err(Error::HelmertDimension(parts));
        }
        let d = parts - 1;
        let mut entries = DMatrix::zeros(d, parts);
        for i in 0..d {
            let k = (i + 1) as f64;
            let r = 1.0 / (k * (k + 1.0)).sqrt();
            for j in 0..=i {
                entries[(i, j)] = r;
            }
            entries[(i, i + 1)] = -k * r;
        }
        Ok(Self { entries })
    }

    /// Number of parts D.
    pub fn parts(&self) -> usize {
        self.entries.ncols()
    }

    /// Dimension d = D - 1 of the transformed space.
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// `H v` for a D-vector `v`.
    pub fn apply(&self, v: &[f64]) -> DVector<f64> {
        &self.entries * DVector::from_column_slice(v)
    }

    /// `H^T y` for a d-vector `y`.
    pub fn apply_transpose(&self, y: &DVector<f64>) -> Vec<f64> {
        self.entries.tr_mul(y).as_slice().to_vec()
    }
}

/// Convenience wrapper around [`HelmertSubMatrix::new`].
pub fn helmert_submatrix(parts: usize) -> Result<HelmertSubMatrix> {
    HelmertSubMatrix::new(parts)
}

fn check_alpha(x: &Composition, alpha: f64) -> Result<()> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::ZeroAlpha);
    }
    if alpha < 0.0 && x.zero_index().is_some() {
        return Err(Error::ZeroPartNeedsPositiveAlpha(alpha));
    }
    Ok(())
}

/// Stay-in-the-simplex power transformation `u_i = x_i^α / Σ_j x_j^α`.
pub fn alpha_transform_simplex(x: &Composition, alpha: f64) -> Result<Vec<f64>> {
    check_alpha(x, alpha)?;
    if alpha == 1.0 {
        return Ok(x.parts.clone());
    }
    let powered: Vec<f64> = x.parts.iter().map(|p| p.powf(alpha)).collect();
    let sum: f64 = powered.iter().sum();
    Ok(powered.into_iter().map(|p| p / sum).collect())
}

/// Result of mapping a point of `R^d` back to the D-part simplex.
///
/// For α = 1 the inverse is affine and defined everywhere; points whose
/// latent preimage lies outside the simplex come back with negative parts
/// and `outside_simplex` set.
#[derive(Debug, Clone, PartialEq)]
pub struct Preimage {
    pub parts: Vec<f64>,
    pub outside_simplex: bool,
}

impl Preimage {
    pub fn into_composition(self) -> Result<Composition> {
        Composition::new(self.parts)
    }
}

/// The centred and scaled α-transformation for a fixed number of parts.
#[derive(Debug, Clone)]
pub struct AlphaTransform {
    helmert: HelmertSubMatrix,
    alpha: f64,
}

impl AlphaTransform {
    pub fn new(parts: usize, alpha: f64) -> Result<Self> {
        if alpha == 0.0 || !alpha.is_finite() {
            return Err(Error::ZeroAlpha);
        }
        Ok(Self {
            helmert: HelmertSubMatrix::new(parts)?,
            alpha,
        })
    }

    pub fn helmert(&self) -> &HelmertSubMatrix {
        &self.helmert
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn parts(&self) -> usize {
        self.helmert.parts()
    }

    pub fn dim(&self) -> usize {
        self.helmert.dim()
    }

    /// `H (D u - 1) / α`.
    pub fn forward(&self, x: &Composition) -> Result<DVector<f64>> {
        let parts = self.parts();
        if x.len() != parts {
            return Err(Error::DimensionMismatch {
                expected: parts,
                found: x.len(),
            });
        }
        let u = alpha_transform_simplex(x, self.alpha)?;
        let dd = parts as f64;
        let centred: Vec<f64> = u.iter().map(|ui| (dd * ui - 1.0) / self.alpha).collect();
        Ok(self.helmert.apply(&centred))
    }

    pub fn inverse(&self, y: &DVector<f64>) -> Result<Preimage> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: y.len(),
            });
        }
        let dd = self.parts() as f64;
        // H^T H is the centring projector, so H^T y recovers (D u - 1) / α.
        let centred = self.helmert.apply_transpose(y);
        let u: Vec<f64> = centred
            .iter()
            .map(|c| (self.alpha * c + 1.0) / dd)
            .collect();
        if self.alpha == 1.0 {
            let outside_simplex = u.iter().any(|&p| p < 0.0);
            return Ok(Preimage {
                parts: u,
                outside_simplex,
            });
        }
        let mut powered = Vec::with_capacity(u.len());
        for (i, &ui) in u.iter().enumerate() {
            if ui < 0.0 || (ui == 0.0 && self.alpha < 0.0) {
                return Err(Error::OutOfImage(i));
            }
            powered.push(ui.powf(1.0 / self.alpha));
        }
        let sum: f64 = powered.iter().sum();
        Ok(Preimage {
            parts: powered.into_iter().map(|p| p / sum).collect(),
            outside_simplex: false,
        })
    }
}

/// Centred and scaled α-transformation of a single composition.
pub fn alpha_transform(x: &Composition, alpha: f64) -> Result<DVector<f64>> {
    AlphaTransform::new(x.len(), alpha)?.forward(x)
}

/// Inverse of [`alpha_transform`]; `parts` is D = len(y) + 1.
pub fn inverse_alpha_transform(y: &DVector<f64>, alpha: f64) -> Result<Preimage> {
    AlphaTransform::new(y.len() + 1, alpha)?.inverse(y)
}

/// `∏_i x_i^(α-1) / (Σ_j x_j^α)^D`, shared by both Jacobians.
fn power_ratio(x: &Composition, alpha: f64) -> Result<f64> {
    if alpha == 0.0 || !alpha.is_finite() {
        return Err(Error::ZeroAlpha);
    }
    if let Some(i) = x.zero_index() {
        return Err(Error::ZeroPartInJacobian(i));
    }
    let sum: f64 = x.parts.iter().map(|p| p.powf(alpha)).sum();
    let log_num: f64 = x.parts.iter().map(|p| (alpha - 1.0) * p.ln()).sum();
    Ok((log_num - x.len() as f64 * sum.ln()).exp())
}

/// Absolute Jacobian determinant of the stay-in-the-simplex transformation,
/// viewed as a map between the first d coordinates.
pub fn jacobian_simplex(x: &Composition, alpha: f64) -> Result<f64> {
    let d = (x.len() - 1) as i32;
    Ok(alpha.abs().powi(d) * power_ratio(x, alpha)?)
}

/// Absolute Jacobian determinant of the centred α-transformation.
/// Constant `D^(d + 1/2)` at α = 1.
pub fn jacobian_alpha(x: &Composition, alpha: f64) -> Result<f64> {
    let parts = x.len() as f64;
    Ok(parts.powf(parts - 0.5) * power_ratio(x, alpha)?)
}

/// `log |J|` of the α = 1 transformation, identical for every composition.
pub fn log_jacobian_alpha_one(parts: usize) -> f64 {
    let dd = parts as f64;
    (dd - 0.5) * dd.ln()
}
