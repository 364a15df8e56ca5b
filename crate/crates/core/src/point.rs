//! Points of the upper half-plane and of the poly-upper half-plane.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("point not in poly-upper half-plane: coordinate {index} = {re}{im:+}i")]
    NotInUpperHalfPlane { index: usize, re: f64, im: f64 },
    #[error("point has no coordinates")]
    Empty,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// A point of ℂ^{+n}: every coordinate has a strictly positive imaginary part.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct PolyUpperPoint(Vec<Complex64>);

impl PolyUpperPoint {
    pub fn new(coords: Vec<Complex64>) -> Result<Self, DomainError> {
        if coords.is_empty() {
            return Err(DomainError::Empty);
        }
        for (index, z) in coords.iter().enumerate() {
            if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
                return Err(DomainError::NotInUpperHalfPlane {
                    index,
                    re: z.re,
                    im: z.im,
                });
            }
        }
        Ok(Self(coords))
    }

    pub fn single(z: Complex64) -> Result<Self, DomainError> {
        Self::new(vec![z])
    }

    /// Every coordinate equal to `z`.
    pub fn repeated(z: Complex64, n: usize) -> Result<Self, DomainError> {
        Self::new(vec![z; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    /// Sub-point on the given axes, in the order given.
    pub fn select(&self, axes: &[usize]) -> PolyUpperPoint {
        PolyUpperPoint(axes.iter().map(|&a| self.0[a]).collect())
    }

    /// `Σ w_ℓ z_ℓ`; lies in ℂ⁺ whenever the weights are non-negative and not all zero.
    pub fn weighted_sum(&self, weights: &[f64]) -> Complex64 {
        self.0
            .iter()
            .zip(weights)
            .map(|(z, &w)| z * w)
            .sum()
    }

    pub(crate) fn check_dim(&self, expected: usize) -> Result<(), DomainError> {
        if self.dim() != expected {
            return Err(DomainError::DimensionMismatch {
                expected,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for PolyUpperPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, z) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}{:+}i", z.re, z.im)?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_closed_half_plane() {
        assert!(PolyUpperPoint::single(Complex64::new(1.0, 0.0)).is_err());
        assert!(PolyUpperPoint::single(Complex64::new(1.0, -1.0)).is_err());
        let err = PolyUpperPoint::new(vec![Complex64::i(), Complex64::new(0.0, -2.0)]).unwrap_err();
        assert!(matches!(err, DomainError::NotInUpperHalfPlane { index: 1, .. }));
        assert!(err.to_string().contains("point not in poly-upper half-plane"));
    }

    #[test]
    fn rejects_nan_and_empty() {
        assert!(PolyUpperPoint::single(Complex64::new(f64::NAN, 1.0)).is_err());
        assert!(PolyUpperPoint::single(Complex64::new(0.0, f64::INFINITY)).is_err());
        assert_eq!(PolyUpperPoint::new(vec![]), Err(DomainError::Empty));
    }

    #[test]
    fn weighted_sum_and_select() {
        let z = PolyUpperPoint::new(vec![Complex64::new(1.0, 1.0), Complex64::new(0.0, 3.0)]).unwrap();
        assert_eq!(z.weighted_sum(&[0.5, 0.5]), Complex64::new(0.5, 2.0));
        assert_eq!(z.select(&[1]).coords(), &[Complex64::new(0.0, 3.0)]);
    }
}
