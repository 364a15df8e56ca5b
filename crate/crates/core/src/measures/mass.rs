//! Measures of finite unions of closed axis-aligned boxes.
//!
//! Integrating an indicator by quadrature converges badly, so each variant
//! reduces a box to something smoother: atoms are counted, Lebesgue boxes have
//! a volume, and pushforwards integrate an exact slice volume over the base.

use num_complex::Complex64;
use thiserror::Error;

use super::{Measure, MeasureError};
use crate::quadrature::{
    line, Estimate, Interrupt, Partial, QuadratureConfig, QuadratureError, QuadratureResult,
};

use std::cell::{Cell, RefCell};

/// Closed box `Π [lo_j, hi_j]`; bounds may be infinite.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MassError {
    #[error("box bounds invalid on axis {axis}: [{lo}, {hi}]")]
    BadBounds { axis: usize, lo: f64, hi: f64 },
    #[error("box dimension {found} does not match measure dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("at most {max} boxes per union are supported, got {found}")]
    TooManyBoxes { max: usize, found: usize },
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

const MAX_BOXES: usize = 16;

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self, MassError> {
        if lo.len() != hi.len() {
            return Err(MassError::DimensionMismatch {
                expected: lo.len(),
                found: hi.len(),
            });
        }
        for (axis, (&l, &h)) in lo.iter().zip(&hi).enumerate() {
            if l.is_nan() || h.is_nan() || l > h || l == f64::INFINITY || h == f64::NEG_INFINITY {
                return Err(MassError::BadBounds { axis, lo: l, hi: h });
            }
        }
        Ok(Self { lo, hi })
    }

    /// Builds a box from `(lo, hi)` pairs.
    pub fn from_intervals(intervals: &[(f64, f64)]) -> Result<Self, MassError> {
        Self::new(
            intervals.iter().map(|i| i.0).collect(),
            intervals.iter().map(|i| i.1).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&v, (&l, &h))| l <= v && v <= h)
    }

    fn intersect(&self, other: &AxisBox) -> Option<AxisBox> {
        let lo: Vec<f64> = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi: Vec<f64> = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            None
        } else {
            Some(AxisBox { lo, hi })
        }
    }

    fn project(&self, axes: &[usize]) -> AxisBox {
        AxisBox {
            lo: axes.iter().map(|&a| self.lo[a]).collect(),
            hi: axes.iter().map(|&a| self.hi[a]).collect(),
        }
    }
}

/// `μ(U)` for `U` the union of `boxes`, by inclusion–exclusion over their
/// intersections. Infinite mass is reported as `diverged`.
pub fn mass(measure: &Measure, boxes: &[AxisBox], cfg: &QuadratureConfig) -> Result<QuadratureResult, MassError> {
    measure.validate()?;
    cfg.validate()?;
    if boxes.len() > MAX_BOXES {
        return Err(MassError::TooManyBoxes {
            max: MAX_BOXES,
            found: boxes.len(),
        });
    }
    for b in boxes {
        if b.dim() != measure.dim() {
            return Err(MassError::DimensionMismatch {
                expected: measure.dim(),
                found: b.dim(),
            });
        }
    }
    let mut total = Mass::ZERO;
    for mask in 1u32..(1u32 << boxes.len()) {
        let mut members = (0..boxes.len()).filter(|i| mask & (1 << i) != 0);
        let first = members.next().expect("mask is nonzero");
        let mut region = Some(boxes[first].clone());
        for i in members {
            region = region.and_then(|r| r.intersect(&boxes[i]));
        }
        let Some(region) = region else { continue };
        let m = box_mass(measure, &region, cfg)?;
        if m.infinite {
            // the union contains a set of infinite measure
            return Ok(QuadratureResult::divergent(Complex64::new(f64::INFINITY, 0.0)));
        }
        let sign = if mask.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
        total.value += sign * m.value;
        total.error += m.error;
        total.converged &= m.converged;
    }
    Ok(QuadratureResult {
        value: Complex64::new(total.value.max(0.0), 0.0),
        error_estimate: total.error,
        converged: total.converged,
        diverged: false,
    })
}

#[derive(Debug, Clone, Copy)]
struct Mass {
    value: f64,
    error: f64,
    converged: bool,
    infinite: bool,
}

impl Mass {
    const ZERO: Mass = Mass {
        value: 0.0,
        error: 0.0,
        converged: true,
        infinite: false,
    };
    const INFINITE: Mass = Mass {
        value: f64::INFINITY,
        error: 0.0,
        converged: true,
        infinite: true,
    };

    fn exact(value: f64) -> Mass {
        if value.is_infinite() {
            Mass::INFINITE
        } else {
            Mass { value, ..Mass::ZERO }
        }
    }

    fn from_result(r: QuadratureResult) -> Mass {
        if r.diverged {
            Mass::INFINITE
        } else {
            Mass {
                value: r.value.re,
                error: r.error_estimate,
                converged: r.converged,
                infinite: false,
            }
        }
    }

    /// Product measure of a product set, with `0 · ∞ = 0`.
    fn product(parts: &[Mass]) -> Mass {
        if parts.iter().any(|m| !m.infinite && m.value == 0.0) {
            return Mass::ZERO;
        }
        if parts.iter().any(|m| m.infinite) {
            return Mass::INFINITE;
        }
        let value: f64 = parts.iter().map(|m| m.value).product();
        let error = parts
            .iter()
            .enumerate()
            .map(|(i, m)| {
                m.error
                    * parts
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, o)| o.value)
                        .product::<f64>()
            })
            .sum();
        Mass {
            value,
            error,
            converged: parts.iter().all(|m| m.converged),
            infinite: false,
        }
    }
}

fn width(lo: f64, hi: f64) -> f64 {
    if lo >= hi {
        0.0
    } else {
        hi - lo
    }
}

fn box_mass(measure: &Measure, region: &AxisBox, cfg: &QuadratureConfig) -> Result<Mass, QuadratureError> {
    match measure {
        Measure::Atomic { atoms, .. } => Ok(Mass::exact(
            atoms
                .iter()
                .filter(|a| region.contains(&a.location))
                .map(|a| a.weight)
                .sum(),
        )),
        Measure::LebesgueDensity { density, dim } => {
            let widths: Vec<Mass> = region
                .lo
                .iter()
                .zip(&region.hi)
                .map(|(&l, &h)| Mass::exact(width(l, h)))
                .collect();
            let volume = Mass::product(&widths);
            if density.is_unit() || volume.value == 0.0 && !volume.infinite {
                return Ok(volume);
            }
            let point = RefCell::new(vec![0.0; *dim]);
            let ok = Cell::new(true);
            let ranges: Vec<(usize, f64, f64)> = (0..*dim).map(|a| (a, region.lo[a], region.hi[a])).collect();
            let leaf = |_: &QuadratureConfig| -> Partial {
                let p = point.borrow().clone();
                let w = density.eval(&p);
                if !(w >= 0.0 && w.is_finite()) {
                    return Err(Interrupt::Failed(QuadratureError::InvalidIntegrand {
                        point: p,
                        reason: "density negative or not finite",
                    }));
                }
                Ok(Estimate::exact(Complex64::new(w, 0.0)))
            };
            let r = crate::quadrature::nest_ranges(&point, &ranges, &leaf, cfg, &ok)?;
            let mut m = Mass::from_result(r);
            m.converged &= ok.get();
            Ok(m)
        }
        Measure::Product { factors } => {
            let mut parts = Vec::with_capacity(factors.len());
            let mut offset = 0;
            for f in factors {
                let axes: Vec<usize> = (offset..offset + f.dim()).collect();
                parts.push(box_mass(f, &region.project(&axes), cfg)?);
                offset += f.dim();
            }
            Ok(Mass::product(&parts))
        }
        Measure::Padded { dim, inner_axes, inner } => {
            let mut parts = vec![box_mass(inner, &region.project(inner_axes), cfg)?];
            for a in (0..*dim).filter(|a| !inner_axes.contains(a)) {
                parts.push(Mass::exact(width(region.lo[a], region.hi[a])));
            }
            Ok(Mass::product(&parts))
        }
        Measure::Pushforward2D { base, coefficients } => {
            let [alpha, beta, gamma, delta] = *coefficients;
            let slice = |t: &[f64]| -> Partial {
                let t1 = t[0];
                let (lo0, hi0) = preimage(alpha * t1, beta, region.lo[0], region.hi[0]);
                let (lo1, hi1) = preimage(gamma * t1, delta, region.lo[1], region.hi[1]);
                let len = width(lo0.max(lo1), hi0.min(hi1));
                if len.is_infinite() {
                    return Err(Interrupt::Diverged);
                }
                Ok(Estimate::exact(Complex64::new(len, 0.0)))
            };
            Ok(Mass::from_result(base.integrate_partial(&slice, cfg)?))
        }
        Measure::PushforwardLadder { base, b, scale } => {
            let b = b.values();
            let n = b.len() + 1;
            let inner_cfg = cfg.nested();
            let slice = |t: &[f64]| -> Partial {
                let t1 = t[0];
                let mut intervals = Vec::with_capacity(n - 1);
                for j in 0..n - 1 {
                    // t1 - b_j s ∈ [lo_j, hi_j]  ⇔  s ∈ [(t1 - hi_j)/b_j, (t1 - lo_j)/b_j]
                    let lo = (t1 - region.hi[j]) / b[j];
                    let hi = (t1 - region.lo[j]) / b[j];
                    if !(lo < hi) {
                        return Ok(Estimate::exact(Complex64::new(0.0, 0.0)));
                    }
                    intervals.push((lo, hi));
                }
                let slab = (region.lo[n - 1] - t1, region.hi[n - 1] - t1);
                let v = slab_volume(&intervals, slab, &inner_cfg)?;
                Ok(Estimate {
                    value: Complex64::new(v.value.re, 0.0),
                    error: v.error,
                })
            };
            let m = Mass::from_result(base.integrate_partial(&slice, cfg)?);
            Ok(Mass {
                value: m.value * scale,
                error: m.error * scale,
                ..m
            })
        }
    }
}

/// `{s : offset + coeff·s ∈ [lo, hi]}` as an interval, possibly empty or all of ℝ.
fn preimage(offset: f64, coeff: f64, lo: f64, hi: f64) -> (f64, f64) {
    if coeff == 0.0 {
        if lo <= offset && offset <= hi {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (0.0, 0.0)
        }
    } else {
        let a = (lo - offset) / coeff;
        let b = (hi - offset) / coeff;
        (a.min(b), a.max(b))
    }
}

/// Volume of `{x ∈ Π intervals : slab.0 ≤ Σx ≤ slab.1}`.
fn slab_volume(intervals: &[(f64, f64)], slab: (f64, f64), cfg: &QuadratureConfig) -> Partial {
    if slab.0 > slab.1 {
        return Ok(Estimate::exact(Complex64::new(0.0, 0.0)));
    }
    if intervals.iter().all(|(l, h)| l.is_finite() && h.is_finite()) {
        let v = sum_cdf(intervals, slab.1) - sum_cdf(intervals, slab.0);
        return Ok(Estimate::exact(Complex64::new(v.max(0.0), 0.0)));
    }
    match intervals {
        [] => Ok(Estimate::exact(Complex64::new(0.0, 0.0))),
        [(l, h)] => {
            let len = width(l.max(slab.0), h.min(slab.1));
            if len.is_infinite() {
                Err(Interrupt::Diverged)
            } else {
                Ok(Estimate::exact(Complex64::new(len, 0.0)))
            }
        }
        [(l, h), rest @ ..] => {
            let g = |x: f64, inner_cfg: &QuadratureConfig| slab_volume(rest, (slab.0 - x, slab.1 - x), inner_cfg);
            match line(&g, *l, *h, cfg) {
                Ok(r) if r.diverged => Err(Interrupt::Diverged),
                Ok(r) => Ok(Estimate {
                    value: r.value,
                    error: r.error_estimate,
                }),
                Err(e) => Err(Interrupt::Failed(e)),
            }
        }
    }
}

/// Volume of `{x ∈ Π [a_j, c_j] : Σx ≤ s}` for finite intervals, by
/// inclusion–exclusion over the upper corners.
fn sum_cdf(intervals: &[(f64, f64)], s: f64) -> f64 {
    let widths: Vec<f64> = intervals.iter().map(|(a, c)| c - a).collect();
    let total: f64 = widths.iter().product();
    let low: f64 = intervals.iter().map(|(a, _)| a).sum();
    let high: f64 = low + widths.iter().sum::<f64>();
    if s <= low {
        return 0.0;
    }
    if s >= high {
        return total;
    }
    let m = intervals.len();
    let factorial: f64 = (1..=m).map(|k| k as f64).product();
    let mut acc = 0.0;
    for mask in 0u32..(1u32 << m) {
        let shift: f64 = (0..m).filter(|j| mask & (1 << j) != 0).map(|j| widths[j]).sum();
        let r = s - low - shift;
        if r > 0.0 {
            let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * r.powi(m as i32);
        }
    }
    (acc / factorial).clamp(0.0, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex_transform::LadderCoefficients;
    use std::f64::consts::PI;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn pi_delta0() -> Measure {
        Measure::dirac(vec![0.0], PI).unwrap()
    }

    fn bx(iv: &[(f64, f64)]) -> AxisBox {
        AxisBox::from_intervals(iv).unwrap()
    }

    #[test]
    fn sum_cdf_unit_square() {
        let sq = [(0.0, 1.0), (0.0, 1.0)];
        assert!((sum_cdf(&sq, 0.5) - 0.125).abs() < 1e-15);
        assert!((sum_cdf(&sq, 1.0) - 0.5).abs() < 1e-15);
        assert!((sum_cdf(&sq, 1.5) - 0.875).abs() < 1e-15);
        let cube = [(0.0, 1.0); 3];
        assert!((sum_cdf(&cube, 1.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn product_box() {
        let m = Measure::product(vec![pi_delta0(), Measure::lebesgue(1)]).unwrap();
        let r = mass(&m, &[bx(&[(-1.0, 1.0), (0.0, 2.0)])], &cfg()).unwrap();
        assert!((r.value.re - 2.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn pushforward_line_box() {
        let m = Measure::pushforward_2d(pi_delta0(), [1.0, 1.0, 1.0, -1.0]).unwrap();
        let r = mass(&m, &[bx(&[(-1.0, 1.0), (-1.0, 1.0)])], &cfg()).unwrap();
        assert!((r.value.re - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn ladder_boxes() {
        let b = LadderCoefficients::new(vec![1.0]).unwrap();
        let m = Measure::pushforward_ladder(pi_delta0(), b, 2.0).unwrap();
        let r = mass(&m, &[bx(&[(-1.0, 0.0), (0.0, 1.0)])], &cfg()).unwrap();
        assert!((r.value.re - 2.0 * PI).abs() < 1e-12);
        let r = mass(&m, &[bx(&[(1.0, 2.0), (1.0, 2.0)])], &cfg()).unwrap();
        assert_eq!(r.value.re, 0.0);
    }

    #[test]
    fn union_by_inclusion_exclusion() {
        let m = Measure::lebesgue(2);
        let r = mass(&m, &[bx(&[(0.0, 2.0), (0.0, 2.0)]), bx(&[(1.0, 3.0), (1.0, 3.0)])], &cfg()).unwrap();
        assert!((r.value.re - 7.0).abs() < 1e-14);
    }

    #[test]
    fn closed_boxes_count_boundary_atoms() {
        let m = Measure::dirac(vec![1.0, 0.0], 3.0).unwrap();
        let r = mass(&m, &[bx(&[(0.0, 1.0), (0.0, 0.0)])], &cfg()).unwrap();
        assert_eq!(r.value.re, 3.0);
        let r = mass(&m, &[bx(&[(0.0, 1.0), (-1.0, 0.0)]), bx(&[(1.0, 2.0), (0.0, 1.0)])], &cfg()).unwrap();
        assert_eq!(r.value.re, 3.0);
    }

    #[test]
    fn infinite_mass_diverges() {
        let r = mass(&Measure::lebesgue(1), &[bx(&[(0.0, f64::INFINITY)])], &cfg()).unwrap();
        assert!(r.diverged);
        // a degenerate axis makes the product null
        let r = mass(&Measure::lebesgue(2), &[bx(&[(0.0, f64::INFINITY), (1.0, 1.0)])], &cfg()).unwrap();
        assert_eq!(r.value.re, 0.0);
        assert!(!r.diverged);
    }

    #[test]
    fn density_mass() {
        let d = super::super::Density::Expr(super::super::DensityExpr::parse("2*t1").unwrap());
        let m = Measure::with_density(1, d).unwrap();
        let r = mass(&m, &[bx(&[(0.0, 3.0)])], &cfg()).unwrap();
        assert!((r.value.re - 9.0).abs() < 1e-12);
    }

    #[test]
    fn ladder_with_unbounded_box_axis() {
        // n = 3 ladder over Lebesgue-free base; first axis unbounded
        let b = LadderCoefficients::new(vec![1.0, 1.0]).unwrap();
        let m = Measure::pushforward_ladder(Measure::dirac(vec![0.0], 1.0).unwrap(), b, 3.0).unwrap();
        // t1 = 0: image (-t2, -t3, t2 + t3). Box: x free, y ∈ [-1, 0], x+y... sum ∈ [0, 1]
        // t3 ∈ [0, 1], t2 ∈ ℝ with t2 + t3 ∈ [0, 1]: area 1
        let r = mass(&m, &[bx(&[(f64::NEG_INFINITY, f64::INFINITY), (-1.0, 0.0), (0.0, 1.0)])], &cfg()).unwrap();
        assert!((r.value.re - 3.0).abs() < 1e-6, "{r:?}");
    }
}
