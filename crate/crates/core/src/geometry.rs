//! Ray projection onto the simplex boundary and Gram-Schmidt rotations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::simplex::{Composition, UNIT_SUM_TOL};

/// Parts within this distance of zero count as zero.
pub const ZERO_TOL: f64 = 1e-12;

/// Standard basis vectors whose residual falls below this are skipped when
/// completing the Gram-Schmidt basis.
pub const BASIS_SKIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Interior,
    /// Exactly one zero part, at the given (0-based) index.
    Face(usize),
    OutsideSimplex,
}

fn check_unit_sum(x: &[f64]) -> Result<()> {
    let sum: f64 = x.iter().sum();
    if !sum.is_finite() || (sum - 1.0).abs() > UNIT_SUM_TOL {
        return Err(Error::NotUnitSum { sum });
    }
    Ok(())
}

/// Index of the smallest part; errors if another part ties with it.
fn unique_argmin(x: &[f64]) -> Result<usize> {
    let (mut best, mut second) = (0usize, None::<usize>);
    for i in 1..x.len() {
        if x[i] < x[best] {
            best = i;
        }
    }
    for (i, &v) in x.iter().enumerate() {
        if i != best && (v - x[best]).abs() <= ZERO_TOL {
            second = Some(i);
            break;
        }
    }
    match second {
        Some(j) => Err(Error::TiedMinimum(best.min(j), best.max(j))),
        None => Ok(best),
    }
}

/// Sorts a unit-sum vector into interior, single-zero face, or outside.
pub fn classify(x: &[f64]) -> Result<Classification> {
    check_unit_sum(x)?;
    if x.iter().any(|&p| p < -ZERO_TOL) {
        unique_argmin(x)?;
        return Ok(Classification::OutsideSimplex);
    }
    let zeros: Vec<usize> = (0..x.len()).filter(|&i| x[i].abs() <= ZERO_TOL).collect();
    match zeros.len() {
        0 => Ok(Classification::Interior),
        1 => Ok(Classification::Face(zeros[0])),
        count => Err(Error::MultipleZeros { count }),
    }
}

/// A latent point pulled onto a face of the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub composition: Composition,
    pub zero_index: usize,
    /// Fraction `t*` of the way from the centre to the original point.
    pub scale: f64,
}

/// Moves `x` toward the simplex centre along the connecting line until its
/// most negative part reaches zero.
///
/// The projected point is `c + t (x - c)` with `c = (1/D, ..., 1/D)` and
/// `t = 1 / (1 - D min_j x_j)`.
pub fn project_to_boundary(x: &[f64]) -> Result<ProjectionResult> {
    if classify(x)? != Classification::OutsideSimplex {
        return Err(Error::NotOutside);
    }
    let zero_index = unique_argmin(x)?;
    let dd = x.len() as f64;
    let centre = 1.0 / dd;
    let scale = 1.0 / (1.0 - dd * x[zero_index]);
    let mut parts: Vec<f64> = x.iter().map(|&xi| centre + scale * (xi - centre)).collect();
    parts[zero_index] = 0.0;
    Ok(ProjectionResult {
        composition: Composition::from_parts_unchecked(parts),
        zero_index,
        scale,
    })
}

/// Orthogonal matrix whose first row is the unit direction it was built
/// from, so that `B y = (|y|, 0, ..., 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotationMatrix {
    entries: DMatrix<f64>,
    source: DVector<f64>,
}

impl RotationMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Unit direction the rotation maps onto the first axis.
    pub fn source(&self) -> &DVector<f64> {
        &self.source
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.entries * v
    }

    /// `B S B^T`.
    pub fn conjugate(&self, s: &DMatrix<f64>) -> DMatrix<f64> {
        &self.entries * s * self.entries.transpose()
    }

    /// Rotation with row `row` negated. Used to probe reflection invariance.
    pub fn with_row_negated(&self, row: usize) -> Self {
        let mut entries = self.entries.clone();
        entries.row_mut(row).neg_mut();
        Self {
            entries,
            source: self.source.clone(),
        }
    }
}

/// Orthonormal basis with `y / |y|` first, completed by standard basis
/// vectors in index order. Each candidate is orthogonalized twice
/// (modified Gram-Schmidt with reorthogonalization).
pub fn gram_schmidt_rotation(y: &DVector<f64>) -> Result<RotationMatrix> {
    let d = y.len();
    let norm = y.norm();
    if d == 0 || !(norm > 1e-12) || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    let first = y / norm;
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(d);
    basis.push(first.clone());
    for k in 0..d {
        if basis.len() == d {
            break;
        }
        let mut u = DVector::zeros(d);
        u[k] = 1.0;
        for _ in 0..2 {
            for e in &basis {
                let proj = u.dot(e);
                u.axpy(-proj, e, 1.0);
            }
        }
        let r = u.norm();
        if r < BASIS_SKIP_TOL {
            continue;
        }
        basis.push(u / r);
    }
    debug_assert_eq!(basis.len(), d);
    let mut entries = DMatrix::zeros(d, d);
    for (i, e) in basis.iter().enumerate() {
        entries.set_row(i, &e.transpose());
    }
    Ok(RotationMatrix {
        entries,
        source: first,
    })
}

/// Rotation data of a transformed face point: `B` and `c1 = |y|`.
pub fn rotated_face_point(y_face: &DVector<f64>) -> Result<(RotationMatrix, f64)> {
    let rotation = gram_schmidt_rotation(y_face)?;
    Ok((rotation, y_face.norm()))
}
