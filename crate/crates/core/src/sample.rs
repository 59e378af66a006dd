//! Datasets of compositions and their α = 1 transformed form.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{rotated_face_point, RotationMatrix};
use crate::simplex::{AlphaTransform, Composition};

/// An ordered collection of D-part compositions, each with at most one zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CompositionalDataset {
    parts: usize,
    compositions: Vec<Composition>,
}

impl CompositionalDataset {
    pub fn new(parts: usize, compositions: Vec<Composition>) -> Result<Self> {
        if parts < 2 {
            return Err(Error::TooFewParts(parts));
        }
        if let Some(c) = compositions.iter().find(|c| c.len() != parts) {
            return Err(Error::DimensionMismatch {
                expected: parts,
                found: c.len(),
            });
        }
        Ok(Self {
            parts,
            compositions,
        })
    }

    /// Number of parts D.
    pub fn parts(&self) -> usize {
        self.parts
    }

    pub fn compositions(&self) -> &[Composition] {
        &self.compositions
    }

    pub fn len(&self) -> usize {
        self.compositions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.compositions.is_empty()
    }

    pub fn n_interior(&self) -> usize {
        self.compositions.iter().filter(|c| c.is_interior()).count()
    }

    pub fn n_face(&self) -> usize {
        self.len() - self.n_interior()
    }

    /// Number of compositions with their zero in each component.
    pub fn zero_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.parts];
        for c in &self.compositions {
            if let Some(j) = c.zero_index() {
                counts[j] += 1;
            }
        }
        counts
    }
}

/// A transformed face point with its rotation onto the first axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FacePoint {
    pub y: DVector<f64>,
    pub zero_index: usize,
    pub rotation: RotationMatrix,
    /// `c1 = |y|`, the lower limit of the censoring integral.
    pub radius: f64,
}

impl FacePoint {
    pub fn new(y: DVector<f64>, zero_index: usize) -> Result<Self> {
        let (rotation, radius) = rotated_face_point(&y)?;
        Ok(Self {
            y,
            zero_index,
            rotation,
            radius,
        })
    }
}

/// A dataset mapped to `R^d` by the α = 1 transformation, split into
/// interior points and face points. Face rotations are computed once here.
#[derive(Debug, Clone)]
pub struct TransformedSample {
    parts: usize,
    interior: Vec<DVector<f64>>,
    face: Vec<FacePoint>,
}

impl TransformedSample {
    pub fn from_dataset(data: &CompositionalDataset) -> Result<Self> {
        let transform = AlphaTransform::new(data.parts(), 1.0)?;
        let mut interior = Vec::new();
        let mut face = Vec::new();
        for c in data.compositions() {
            let y = transform.forward(c)?;
            match c.zero_index() {
                None => interior.push(y),
                Some(j) => face.push(FacePoint::new(y, j)?),
            }
        }
        Ok(Self {
            parts: data.parts(),
            interior,
            face,
        })
    }

    /// Builds a sample directly from transformed vectors.
    pub fn from_parts(
        parts: usize,
        interior: Vec<DVector<f64>>,
        face: Vec<FacePoint>,
    ) -> Result<Self> {
        let d = parts.checked_sub(1).filter(|&d| d > 0).ok_or(Error::TooFewParts(parts))?;
        for y in interior.iter().chain(face.iter().map(|f| &f.y)) {
            if y.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: y.len(),
                });
            }
        }
        Ok(Self {
            parts,
            interior,
            face,
        })
    }

    /// The transformation exponent; always 1 for this model.
    pub fn alpha(&self) -> f64 {
        1.0
    }

    pub fn parts(&self) -> usize {
        self.parts
    }

    pub fn dim(&self) -> usize {
        self.parts - 1
    }

    pub fn interior(&self) -> &[DVector<f64>] {
        &self.interior
    }

    pub fn face(&self) -> &[FacePoint] {
        &self.face
    }

    pub fn n_interior(&self) -> usize {
        self.interior.len()
    }

    pub fn n_face(&self) -> usize {
        self.face.len()
    }

    pub fn len(&self) -> usize {
        self.interior.len() + self.face.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Mean and unbiased covariance of every transformed point, face points
    /// taken at their observed coordinates.
    pub fn moments(&self) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let d = self.dim();
        let points: Vec<&DVector<f64>> = self
            .interior
            .iter()
            .chain(self.face.iter().map(|f| &f.y))
            .collect();
        if points.is_empty() {
            return Err(Error::EmptySample);
        }
        let n = points.len() as f64;
        let mean = points.iter().fold(DVector::zeros(d), |acc, y| acc + *y) / n;
        let mut cov = DMatrix::zeros(d, d);
        for y in &points {
            let r = *y - &mean;
            cov += &r * r.transpose();
        }
        let denom = if points.len() > 1 { n - 1.0 } else { 1.0 };
        Ok((mean, cov / denom))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simplex::inverse_alpha_transform;

    fn dataset() -> CompositionalDataset {
        let rows = [
            vec![0.2, 0.3, 0.5],
            vec![0.0, 0.4, 0.6],
            vec![0.1, 0.1, 0.8],
            vec![0.5, 0.5, 0.0],
        ];
        CompositionalDataset::new(
            3,
            rows.iter().map(|r| Composition::new(r.clone()).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn counts_and_split() {
        let data = dataset();
        assert_eq!(data.n_interior(), 2);
        assert_eq!(data.n_face(), 2);
        assert_eq!(data.zero_counts(), vec![1, 0, 1]);
        let s = TransformedSample::from_dataset(&data).unwrap();
        assert_eq!(s.n_interior(), 2);
        assert_eq!(s.n_face(), 2);
        assert_eq!(s.face()[0].zero_index, 0);
        assert_eq!(s.face()[1].zero_index, 2);
    }

    #[test]
    fn transformed_points_invert_to_their_compositions() {
        let s = TransformedSample::from_dataset(&dataset()).unwrap();
        for y in s.interior() {
            let back = inverse_alpha_transform(y, 1.0).unwrap();
            assert!(back.parts.iter().all(|&p| p > 0.0));
        }
        for f in s.face() {
            let back = inverse_alpha_transform(&f.y, 1.0).unwrap();
            assert!(back.parts[f.zero_index].abs() < 1e-10);
            let z = f.rotation.apply(&f.y);
            assert!((z[0] - f.radius).abs() < 1e-12 && z[1].abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_mixed_dimensions() {
        let c = vec![
            Composition::new(vec![0.5, 0.5]).unwrap(),
            Composition::new(vec![0.2, 0.3, 0.5]).unwrap(),
        ];
        assert!(matches!(
            CompositionalDataset::new(2, c),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
