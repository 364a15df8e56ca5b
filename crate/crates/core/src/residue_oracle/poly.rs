//! Dense polynomials with complex coefficients.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

/// `Σ c_k τ^k` with coefficients in ascending order. Trailing zeros are
/// trimmed, so the zero polynomial has no coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPolynomial {
    coeffs: Vec<Complex64>,
}

impl ComplexPolynomial {
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        while coeffs.last().is_some_and(|c| *c == Complex64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect())
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![] }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    /// `c₀ + c₁τ`.
    pub fn linear(c0: Complex64, c1: Complex64) -> Self {
        Self::new(vec![c0, c1])
    }

    /// `Π (τ − r)`.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        roots.iter().fold(Self::constant(Complex64::new(1.0, 0.0)), |p, &r| {
            p * Self::linear(-r, Complex64::new(1.0, 0.0))
        })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Complex64 {
        self.coeffs.last().copied().unwrap_or_default()
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn nth_derivative(&self, n: usize) -> Self {
        (0..n).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    /// Coefficients of `s ↦ p(s + center)`.
    pub fn taylor_shift(&self, center: Complex64) -> Self {
        // repeated synthetic division by (τ − center)
        let mut c = self.coeffs.clone();
        let n = c.len();
        for i in 0..n {
            for j in (i..n - 1).rev() {
                let next = c[j + 1];
                c[j] += center * next;
            }
        }
        Self::new(c)
    }

    /// Largest coefficient modulus, used as a scale for tolerances.
    pub fn norm_inf(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl Add for &ComplexPolynomial {
    type Output = ComplexPolynomial;
    fn add(self, rhs: &ComplexPolynomial) -> ComplexPolynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let get = |v: &[Complex64], i: usize| v.get(i).copied().unwrap_or_default();
        ComplexPolynomial::new((0..n).map(|i| get(&self.coeffs, i) + get(&rhs.coeffs, i)).collect())
    }
}

impl Add for ComplexPolynomial {
    type Output = ComplexPolynomial;
    fn add(self, rhs: ComplexPolynomial) -> ComplexPolynomial {
        &self + &rhs
    }
}

impl Neg for ComplexPolynomial {
    type Output = ComplexPolynomial;
    fn neg(self) -> ComplexPolynomial {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl Sub for ComplexPolynomial {
    type Output = ComplexPolynomial;
    fn sub(self, rhs: ComplexPolynomial) -> ComplexPolynomial {
        &self + &(-rhs)
    }
}

impl Mul for &ComplexPolynomial {
    type Output = ComplexPolynomial;
    fn mul(self, rhs: &ComplexPolynomial) -> ComplexPolynomial {
        if self.is_zero() || rhs.is_zero() {
            return ComplexPolynomial::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        ComplexPolynomial::new(out)
    }
}

impl Mul for ComplexPolynomial {
    type Output = ComplexPolynomial;
    fn mul(self, rhs: ComplexPolynomial) -> ComplexPolynomial {
        &self * &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trims_and_degree() {
        let p = ComplexPolynomial::new(vec![c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(p.degree(), Some(0));
        assert_eq!(ComplexPolynomial::zero().degree(), None);
    }

    #[test]
    fn roots_product_and_eval() {
        let p = ComplexPolynomial::from_roots(&[c(0.0, 1.0), c(0.0, -1.0)]);
        assert_eq!(p, ComplexPolynomial::from_real(&[1.0, 0.0, 1.0]));
        assert_eq!(p.eval(c(2.0, 0.0)), c(5.0, 0.0));
        assert_eq!(p.derivative(), ComplexPolynomial::from_real(&[0.0, 2.0]));
    }

    #[test]
    fn shift_matches_evaluation() {
        let p = ComplexPolynomial::new(vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.0, 1.0), c(2.0, -1.0)]);
        let center = c(0.7, -0.2);
        let q = p.taylor_shift(center);
        for s in [c(0.0, 0.0), c(1.0, 1.0), c(-2.0, 0.3)] {
            assert!((q.eval(s) - p.eval(s + center)).norm() < 1e-12);
        }
    }

    #[test]
    fn arithmetic() {
        let p = ComplexPolynomial::from_real(&[1.0, 1.0]);
        let q = ComplexPolynomial::from_real(&[-1.0, 1.0]);
        assert_eq!(&p * &q, ComplexPolynomial::from_real(&[-1.0, 0.0, 1.0]));
        assert_eq!(p.clone() - p.clone(), ComplexPolynomial::zero());
        assert_eq!(p + q, ComplexPolynomial::from_real(&[0.0, 2.0]));
    }
}
