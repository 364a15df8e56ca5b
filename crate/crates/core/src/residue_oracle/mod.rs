//! Residue calculus for rational functions of one complex variable.
//!
//! For `f = N/D` with `deg D ≥ deg N + 2` and no real poles,
//! `∫_ℝ f = 2πi Σ_{Im p > 0} Res(f; p) = −2πi Σ_{Im p < 0} Res(f; p)`.
//! Both sums are computed and must agree; this is the independent second
//! path next to quadrature.

mod poly;
mod roots;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

pub use poly::ComplexPolynomial;
pub use roots::{roots, Root, CLUSTER_RADIUS, MERGE_TOLERANCE};

/// Numerator and denominator roots closer than this cancel.
pub const CANCEL_TOLERANCE: f64 = 1e-10;
/// Poles with `|Im p| ≤ REAL_AXIS_TOLERANCE · max(1, |p|)` count as real.
pub const REAL_AXIS_TOLERANCE: f64 = 1e-12;
/// Required agreement of the upper and lower residue sums, relative to `Σ |Res|`.
pub const CROSS_CHECK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResidueError {
    #[error("denominator is identically zero")]
    ZeroDenominator,
    #[error("arc contribution nonzero: deg(den) = {den} < deg(num) + 2 = {needed}")]
    ArcContribution { den: usize, needed: usize },
    #[error("pole on the real axis at {re}{im:+}i")]
    RealPole { re: f64, im: f64 },
    #[error("{re}{im:+}i is not a pole")]
    NotAPole { re: f64, im: f64 },
    #[error("inconsistent multiplicity at pole: stated {stated}, found {found}")]
    WrongMultiplicity { stated: usize, found: usize },
    #[error("upper and lower residue sums disagree: {upper} vs {lower}")]
    CrossCheck { upper: Complex64, lower: Complex64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RationalFunction {
    num: ComplexPolynomial,
    den: ComplexPolynomial,
}

impl RationalFunction {
    pub fn new(num: ComplexPolynomial, den: ComplexPolynomial) -> Result<Self, ResidueError> {
        if den.is_zero() {
            return Err(ResidueError::ZeroDenominator);
        }
        Ok(Self { num, den })
    }

    /// `1 / Π factors`.
    pub fn reciprocal_of(factors: &[ComplexPolynomial]) -> Result<Self, ResidueError> {
        let den = factors
            .iter()
            .fold(ComplexPolynomial::constant(Complex64::new(1.0, 0.0)), |acc, f| &acc * f);
        Self::new(ComplexPolynomial::constant(Complex64::new(1.0, 0.0)), den)
    }

    pub fn num(&self) -> &ComplexPolynomial {
        &self.num
    }

    pub fn den(&self) -> &ComplexPolynomial {
        &self.den
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        self.num.eval(x) / self.den.eval(x)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            num: self.num.scale(s),
            den: self.den.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pole {
    pub location: Complex64,
    pub multiplicity: usize,
}

/// Denominator roots together with the number of numerator roots sitting on them.
fn pole_structure(f: &RationalFunction) -> Vec<(Root, usize)> {
    let num_roots = roots(&f.num);
    roots(&f.den)
        .into_iter()
        .map(|r| {
            let tol = CANCEL_TOLERANCE * r.location.norm().max(1.0);
            let cancelled: usize = num_roots
                .iter()
                .filter(|z| (z.location - r.location).norm() <= tol)
                .map(|z| z.multiplicity)
                .sum();
            (r, cancelled.min(r.multiplicity))
        })
        .collect()
}

/// Poles of `f` after cancelling common numerator and denominator roots.
pub fn find_poles(f: &RationalFunction) -> Vec<Pole> {
    pole_structure(f)
        .into_iter()
        .filter(|(r, c)| r.multiplicity > *c)
        .map(|(r, c)| Pole {
            location: r.location,
            multiplicity: r.multiplicity - c,
        })
        .collect()
}

/// Laurent coefficient of `(τ − p)^{−1}` where `p` is a root of the
/// denominator of order `order` and `others` are the remaining roots.
fn laurent_residue(f: &RationalFunction, p: Complex64, order: usize, others: &[Root]) -> Complex64 {
    let mut rest = ComplexPolynomial::constant(f.den.leading());
    for r in others {
        for _ in 0..r.multiplicity {
            rest = &rest * &ComplexPolynomial::linear(-r.location, Complex64::new(1.0, 0.0));
        }
    }
    // N(p + s) / rest(p + s) = Σ c_k s^k; the residue is c_{order−1}
    let n = f.num.taylor_shift(p);
    let q = rest.taylor_shift(p);
    let get = |poly: &ComplexPolynomial, k: usize| poly.coeffs().get(k).copied().unwrap_or_default();
    let q0 = get(&q, 0);
    let mut c = Vec::with_capacity(order);
    for k in 0..order {
        let mut acc = get(&n, k);
        for j in 0..k {
            acc -= c[j] * get(&q, k - j);
        }
        c.push(acc / q0);
    }
    c[order - 1]
}

/// `Res(f; pole)` where `pole` has the stated multiplicity.
pub fn residue_at(f: &RationalFunction, pole: Complex64, multiplicity: usize) -> Result<Complex64, ResidueError> {
    let structure = pole_structure(f);
    let nearest = structure
        .iter()
        .enumerate()
        .min_by(|a, b| {
            (a.1 .0.location - pole)
                .norm()
                .total_cmp(&(b.1 .0.location - pole).norm())
        })
        .map(|(i, _)| i);
    let not_a_pole = ResidueError::NotAPole {
        re: pole.re,
        im: pole.im,
    };
    let Some(index) = nearest else { return Err(not_a_pole) };
    let (root, cancelled) = structure[index];
    if (root.location - pole).norm() > CLUSTER_RADIUS * pole.norm().max(1.0) {
        return Err(not_a_pole);
    }
    let found = root.multiplicity - cancelled;
    if found != multiplicity {
        return Err(ResidueError::WrongMultiplicity {
            stated: multiplicity,
            found,
        });
    }
    if found == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let others: Vec<Root> = structure
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != index)
        .map(|(_, (r, _))| *r)
        .collect();
    Ok(laurent_residue(f, root.location, root.multiplicity, &others))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineIntegral {
    /// `2πi Σ` upper residues.
    pub value: Complex64,
    /// `−2πi Σ` lower residues.
    pub lower_value: Complex64,
}

/// `∫_ℝ f(τ) dτ` by residues.
pub fn line_integral(f: &RationalFunction) -> Result<LineIntegral, ResidueError> {
    let zero = Complex64::new(0.0, 0.0);
    let Some(num_degree) = f.num.degree() else {
        return Ok(LineIntegral {
            value: zero,
            lower_value: zero,
        });
    };
    let den_degree = f.den.degree().expect("denominator is nonzero");
    if den_degree < num_degree + 2 {
        return Err(ResidueError::ArcContribution {
            den: den_degree,
            needed: num_degree + 2,
        });
    }
    let structure = pole_structure(f);
    let mut upper = zero;
    let mut lower = zero;
    let mut magnitude = 0.0;
    for (i, (root, cancelled)) in structure.iter().enumerate() {
        if root.multiplicity == *cancelled {
            continue;
        }
        let p = root.location;
        if p.im.abs() <= REAL_AXIS_TOLERANCE * p.norm().max(1.0) {
            return Err(ResidueError::RealPole { re: p.re, im: p.im });
        }
        let others: Vec<Root> = structure
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, (r, _))| *r)
            .collect();
        let res = laurent_residue(f, p, root.multiplicity, &others);
        magnitude += res.norm();
        if p.im > 0.0 {
            upper += res;
        } else {
            lower += res;
        }
    }
    if (upper + lower).norm() > CROSS_CHECK_TOLERANCE * magnitude {
        return Err(ResidueError::CrossCheck { upper, lower });
    }
    let two_pi_i = Complex64::new(0.0, 2.0 * PI);
    Ok(LineIntegral {
        value: two_pi_i * upper,
        lower_value: -two_pi_i * lower,
    })
}

fn affine(offset: Complex64, slope: f64) -> ComplexPolynomial {
    ComplexPolynomial::linear(offset, Complex64::new(slope, 0.0))
}

/// `τ ↦ 1 / ((αt₁ + βτ)² + 1)((γt₁ + δτ)² + 1)`: the growth integrand of a
/// two-dimensional pushforward measure restricted to the slice at `t₁`.
pub fn growth_slice(coefficients: [f64; 4], t1: f64) -> Result<RationalFunction, ResidueError> {
    let [alpha, beta, gamma, delta] = coefficients;
    let i = Complex64::i();
    RationalFunction::reciprocal_of(&[
        affine(alpha * t1 - i, beta),
        affine(alpha * t1 + i, beta),
        affine(gamma * t1 - i, delta),
        affine(gamma * t1 + i, delta),
    ])
}

/// `τ ↦ 1 / ((αt₁ + βτ − z₁)² (γt₁ + δτ − z̄₂)²)`: the two-variable
/// Nevanlinna integrand on the slice at `t₁`.
pub fn nevanlinna_slice(coefficients: [f64; 4], t1: f64, z1: Complex64, z2: Complex64) -> Result<RationalFunction, ResidueError> {
    let [alpha, beta, gamma, delta] = coefficients;
    let first = affine(alpha * t1 - z1, beta);
    let second = affine(gamma * t1 - z2.conj(), delta);
    RationalFunction::reciprocal_of(&[first.clone(), first, second.clone(), second])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one() -> ComplexPolynomial {
        ComplexPolynomial::from_real(&[1.0])
    }

    #[test]
    fn lorentzian() {
        let f = RationalFunction::new(one(), ComplexPolynomial::from_real(&[1.0, 0.0, 1.0])).unwrap();
        let poles = find_poles(&f);
        assert_eq!(poles.len(), 2);
        assert!((residue_at(&f, c(0.0, 1.0), 1).unwrap() - c(0.0, -0.5)).norm() < 1e-15);
        let li = line_integral(&f).unwrap();
        assert!((li.value - c(PI, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn squared_lorentzian() {
        let d = ComplexPolynomial::from_real(&[1.0, 0.0, 1.0]);
        let f = RationalFunction::new(one(), &d * &d).unwrap();
        assert!((residue_at(&f, c(0.0, 1.0), 2).unwrap() - c(0.0, -0.25)).norm() < 1e-12);
        assert!(matches!(residue_at(&f, c(0.0, 1.0), 1), Err(ResidueError::WrongMultiplicity { .. })));
        assert!((line_integral(&f).unwrap().value - c(PI / 2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn triple_pole() {
        let f = RationalFunction::new(one(), ComplexPolynomial::from_roots(&[c(0.0, 1.0); 3])).unwrap();
        assert_eq!(
            find_poles(&f),
            vec![Pole {
                location: find_poles(&f)[0].location,
                multiplicity: 3
            }]
        );
        assert!((find_poles(&f)[0].location - c(0.0, 1.0)).norm() < 1e-12);
        // all poles on one side: the integral vanishes
        assert!(line_integral(&f).unwrap().value.norm() < 1e-12);
    }

    #[test]
    fn cancellation() {
        let num = ComplexPolynomial::from_roots(&[c(0.0, 2.0)]);
        let den = ComplexPolynomial::from_roots(&[c(0.0, 2.0), c(0.0, 1.0), c(0.0, -1.0)]);
        let f = RationalFunction::new(num, den).unwrap();
        assert_eq!(find_poles(&f).len(), 2);
        assert!((line_integral(&f).unwrap().value - c(PI, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn errors() {
        let f = RationalFunction::new(ComplexPolynomial::from_real(&[0.0, 1.0]), ComplexPolynomial::from_real(&[1.0, 0.0, 1.0])).unwrap();
        assert!(line_integral(&f).unwrap_err().to_string().contains("arc contribution nonzero"));
        let f = RationalFunction::new(one(), ComplexPolynomial::from_real(&[-1.0, 0.0, 1.0])).unwrap();
        assert!(matches!(line_integral(&f), Err(ResidueError::RealPole { .. })));
        assert!(RationalFunction::new(one(), ComplexPolynomial::zero()).is_err());
        let f = RationalFunction::new(one(), ComplexPolynomial::from_real(&[1.0, 0.0, 1.0])).unwrap();
        assert!(matches!(residue_at(&f, c(5.0, 5.0), 1), Err(ResidueError::NotAPole { .. })));
    }

    #[test]
    fn growth_slice_value() {
        let f = growth_slice([0.0, 1.0, 0.0, -1.0], 0.0).unwrap();
        assert!((line_integral(&f).unwrap().value - c(PI / 2.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn nevanlinna_slice_poles() {
        let f = nevanlinna_slice([0.0, 1.0, 0.0, 1.0], 0.0, c(0.0, 1.0), c(0.0, 1.0)).unwrap();
        let mut poles = find_poles(&f);
        poles.sort_by(|a, b| a.location.im.total_cmp(&b.location.im));
        assert_eq!(poles.len(), 2);
        assert!((poles[0].location - c(0.0, -1.0)).norm() < 1e-12 && poles[0].multiplicity == 2);
        assert!((poles[1].location - c(0.0, 1.0)).norm() < 1e-12 && poles[1].multiplicity == 2);
    }
}
