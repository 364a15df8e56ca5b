//! Adaptive quadrature of complex-valued integrands over ℝ and ℝ^k.
//!
//! Integrals over the whole line are computed after the substitution
//! `t = tan θ`, `θ ∈ (-π/2, π/2)`, with a globally adaptive 7-point Gauss /
//! 15-point Kronrod rule. Divergence cannot be proven numerically; when the
//! adaptive pass does not converge, partial sums over doubling windows
//! `[-L, L]` are inspected and the integral is declared divergent when their
//! modulus grows monotonically past `divergence_threshold`.
//!
//! Iterated integrals are always nested in the caller-supplied order and are
//! never reordered.

use std::cell::{Cell, RefCell};
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub divergence_threshold: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_subdivisions: 2000,
            divergence_threshold: 1e8,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.rel_tol > 0.0) {
            return Err(QuadratureError::InvalidConfig("rel_tol must be positive"));
        }
        if !(self.abs_tol > 0.0) {
            return Err(QuadratureError::InvalidConfig("abs_tol must be positive"));
        }
        if self.max_subdivisions < 1 {
            return Err(QuadratureError::InvalidConfig("max_subdivisions must be at least 1"));
        }
        if !(self.divergence_threshold > 0.0) {
            return Err(QuadratureError::InvalidConfig("divergence_threshold must be positive"));
        }
        Ok(())
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    /// Requested accuracy for an integral of the given modulus.
    pub fn tolerance(&self, magnitude: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * magnitude)
    }

    /// Tolerances for an integral nested inside another one. Inner errors feed
    /// the outer error budget, so they get a quarter of it.
    pub(crate) fn nested(&self) -> Self {
        Self {
            rel_tol: self.rel_tol * 0.25,
            abs_tol: self.abs_tol * 0.25,
            ..*self
        }
    }

    /// Share of the absolute budget for one integrand value, given the
    /// density `weight` (integrating to one over the outer range) at its node.
    fn spread(&self, weight: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * weight,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureResult {
    pub value: Complex64,
    pub error_estimate: f64,
    pub converged: bool,
    pub diverged: bool,
}

impl QuadratureResult {
    pub fn exact(value: Complex64) -> Self {
        Self {
            value,
            error_estimate: 0.0,
            converged: true,
            diverged: false,
        }
    }

    /// A divergent integral; `value` holds the last partial sum seen.
    pub fn divergent(last_partial: Complex64) -> Self {
        Self {
            value: last_partial,
            error_estimate: f64::INFINITY,
            converged: false,
            diverged: true,
        }
    }

    pub(crate) fn scaled(self, factor: f64) -> Self {
        Self {
            value: self.value * factor,
            error_estimate: self.error_estimate * factor.abs(),
            ..self
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("integrand not finite at {point:?}")]
    NonFinite { point: Vec<f64> },
    #[error("invalid quadrature configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("integrand invalid at {point:?}: {reason}")]
    InvalidIntegrand { point: Vec<f64>, reason: &'static str },
    #[error("integration order {order:?} is not a permutation of the axes 0..{dim}")]
    InvalidOrder { order: Vec<usize>, dim: usize },
}

/// Value of an integrand (possibly itself an integral) with its error.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Estimate {
    pub value: Complex64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: Complex64) -> Self {
        Self { value, error: 0.0 }
    }
}

/// Why an integrand evaluation could not produce a value.
#[derive(Debug, Clone)]
pub(crate) enum Interrupt {
    Diverged,
    Failed(QuadratureError),
}

pub(crate) type Partial = Result<Estimate, Interrupt>;

/// Converts an inner integral into an integrand value for an enclosing
/// integral. Non-convergence is recorded in `inner_ok`.
pub(crate) fn lift(
    inner: Result<QuadratureResult, QuadratureError>,
    inner_ok: &Cell<bool>,
) -> Partial {
    match inner {
        Err(e) => Err(Interrupt::Failed(e)),
        Ok(q) if q.diverged => Err(Interrupt::Diverged),
        Ok(q) => {
            if !q.converged {
                inner_ok.set(false);
            }
            Ok(Estimate {
                value: q.value,
                error: q.error_estimate,
            })
        }
    }
}

/// Inverse of [`lift`] for a single point evaluation.
pub(crate) fn settle(value: Partial) -> Result<QuadratureResult, QuadratureError> {
    match value {
        Ok(e) => Ok(QuadratureResult {
            value: e.value,
            error_estimate: e.error,
            converged: true,
            diverged: false,
        }),
        Err(Interrupt::Diverged) => Ok(QuadratureResult::divergent(Complex64::new(0.0, 0.0))),
        Err(Interrupt::Failed(e)) => Err(e),
    }
}

/// Applies the outermost bookkeeping: inner convergence and the error bound.
pub(crate) fn finish(
    mut result: QuadratureResult,
    inner_ok: &Cell<bool>,
    cfg: &QuadratureConfig,
) -> QuadratureResult {
    if result.diverged {
        return result;
    }
    if !inner_ok.get() || result.error_estimate > cfg.tolerance(result.value.norm()) {
        result.converged = false;
    }
    result
}

pub(crate) fn checked(value: Complex64, point: &[f64]) -> Partial {
    if value.re.is_finite() && value.im.is_finite() {
        Ok(Estimate::exact(value))
    } else {
        Err(Interrupt::Failed(QuadratureError::NonFinite {
            point: point.to_vec(),
        }))
    }
}

// Gauss-Kronrod 7/15 nodes and weights (QUADPACK qk15).
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: Complex64,
    /// Rule error on this segment.
    err: f64,
    /// Accumulated error of the integrand values (inner integrals).
    inner_err: f64,
    /// ∫ |f| over the segment.
    abs: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn gk15<G: Fn(f64) -> Partial>(g: &G, a: f64, b: f64) -> Result<Segment, Interrupt> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = g(center)?;
    let mut kronrod = fc.value * WGK[7];
    let mut gauss = fc.value * WG[3];
    let mut abs_sum = fc.value.norm() * WGK[7];
    let mut inner = fc.error * WGK[7];
    let mut values = [Complex64::new(0.0, 0.0); 15];
    values[7] = fc.value;
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = g(center - dx)?;
        let f2 = g(center + dx)?;
        values[j] = f1.value;
        values[14 - j] = f2.value;
        kronrod += (f1.value + f2.value) * WGK[j];
        abs_sum += (f1.value.norm() + f2.value.norm()) * WGK[j];
        inner += (f1.error + f2.error) * WGK[j];
        if j % 2 == 1 {
            gauss += (f1.value + f2.value) * WG[j / 2];
        }
    }
    let mean = kronrod * 0.5;
    let mut asc = WGK[7] * (fc.value - mean).norm();
    for j in 0..7 {
        asc += WGK[j] * ((values[j] - mean).norm() + (values[14 - j] - mean).norm());
    }
    let h = half.abs();
    let res_abs = abs_sum * h;
    let res_asc = asc * h;
    let mut err = ((kronrod - gauss) * half).norm();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    Ok(Segment {
        a,
        b,
        value: kronrod * half,
        err,
        inner_err: inner * h,
        abs: res_abs,
    })
}

struct Adaptive {
    value: Complex64,
    error: f64,
    converged: bool,
}

fn adaptive<G: Fn(f64) -> Partial>(
    g: &G,
    a: f64,
    b: f64,
    panels: usize,
    cfg: &QuadratureConfig,
) -> Result<Adaptive, Interrupt> {
    let mut heap = BinaryHeap::with_capacity(cfg.max_subdivisions + panels);
    let mut value = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut inner = 0.0;
    let mut abs = 0.0;
    let width = (b - a) / panels as f64;
    for i in 0..panels {
        let lo = a + width * i as f64;
        let hi = if i + 1 == panels { b } else { lo + width };
        let seg = gk15(g, lo, hi)?;
        value += seg.value;
        err += seg.err;
        inner += seg.inner_err;
        abs += seg.abs;
        heap.push(seg);
    }
    // Segments too narrow to bisect further keep their contribution but leave the heap.
    let mut frozen: Vec<Segment> = Vec::new();
    let mut subdivisions = 0;
    let scale = a.abs().max(b.abs()).max(1e-300);
    loop {
        // below ROUNDOFF · ∫|f| the rule error is rounding noise
        let tol = cfg.tolerance(value.norm()).max(ROUNDOFF * abs);
        if err.max(0.0) + inner.max(0.0) <= tol {
            return Ok(finalise(&heap, &frozen, true));
        }
        // refining this level cannot shrink the error carried by inner integrals
        if inner > tol && err.max(0.0) <= 0.1 * tol {
            return Ok(finalise(&heap, &frozen, false));
        }
        if subdivisions >= cfg.max_subdivisions {
            return Ok(finalise(&heap, &frozen, false));
        }
        let Some(worst) = heap.pop() else {
            return Ok(finalise(&heap, &frozen, false));
        };
        let mid = 0.5 * (worst.a + worst.b);
        if (worst.b - worst.a) <= 64.0 * f64::EPSILON * scale || mid <= worst.a || mid >= worst.b {
            frozen.push(worst);
            if heap.is_empty() {
                return Ok(finalise(&heap, &frozen, false));
            }
            continue;
        }
        let left = gk15(g, worst.a, mid)?;
        let right = gk15(g, mid, worst.b)?;
        value += left.value + right.value - worst.value;
        err += left.err + right.err - worst.err;
        inner += left.inner_err + right.inner_err - worst.inner_err;
        abs += left.abs + right.abs - worst.abs;
        heap.push(left);
        heap.push(right);
        subdivisions += 1;
    }
}

/// Re-sums the pieces from scratch so that running-sum drift does not leak
/// into the reported value.
fn finalise(heap: &BinaryHeap<Segment>, frozen: &[Segment], converged: bool) -> Adaptive {
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    for seg in heap.iter().chain(frozen) {
        value += seg.value;
        error += seg.err + seg.inner_err;
    }
    Adaptive {
        value,
        error,
        converged,
    }
}

/// Rule errors below this multiple of `∫ |f|` are not resolvable in `f64`.
const ROUNDOFF: f64 = 100.0 * f64::EPSILON;

/// Number of initial panels for the compactified whole-line integral.
const TAN_PANELS: usize = 16;
const FINITE_PANELS: usize = 4;

/// Integrates `f` over `[lo, hi]`, either end possibly infinite. `f` receives
/// the tolerances for any integral it computes in turn: a quarter of the
/// budget, with the absolute part spread over the range so that the summed
/// inner errors stay within it even where the substitution stretches them.
pub(crate) fn line<F: Fn(f64, &QuadratureConfig) -> Partial>(
    f: &F,
    lo: f64,
    hi: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult, QuadratureError> {
    if lo >= hi {
        return Ok(QuadratureResult::exact(Complex64::new(0.0, 0.0)));
    }
    let infinite = lo.is_infinite() || hi.is_infinite();
    let nested = cfg.nested();
    let outcome = if infinite {
        let a = if lo.is_infinite() { -FRAC_PI_2 } else { lo.atan() };
        let b = if hi.is_infinite() { FRAC_PI_2 } else { hi.atan() };
        let g = |theta: f64| -> Partial {
            let t = theta.tan();
            let jac = 1.0 + t * t;
            let e = f(t, &nested.spread(1.0 / ((b - a) * jac)))?;
            let v = e.value * jac;
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Interrupt::Failed(QuadratureError::NonFinite { point: vec![t] }));
            }
            Ok(Estimate {
                value: v,
                error: e.error * jac,
            })
        };
        let panels = if lo.is_infinite() && hi.is_infinite() {
            TAN_PANELS
        } else {
            TAN_PANELS / 2
        };
        adaptive(&g, a, b, panels, cfg)
    } else {
        let inner = nested.spread(1.0 / (hi - lo));
        adaptive(&|t: f64| f(t, &inner), lo, hi, FINITE_PANELS, cfg)
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(Interrupt::Diverged) => return Ok(QuadratureResult::divergent(Complex64::new(0.0, 0.0))),
        Err(Interrupt::Failed(e)) => return Err(e),
    };
    if !outcome.converged && infinite {
        if let Some(last) = detect_divergence(f, lo, hi, cfg)? {
            return Ok(QuadratureResult::divergent(last));
        }
    }
    Ok(QuadratureResult {
        value: outcome.value,
        error_estimate: outcome.error,
        converged: outcome.converged,
        diverged: false,
    })
}

const MAX_DOUBLINGS: usize = 80;
const MONOTONE_RUN: usize = 5;

/// Windowed-doubling check. Returns the last partial sum when the partial
/// sums grow monotonically beyond the divergence threshold.
fn detect_divergence<F: Fn(f64, &QuadratureConfig) -> Partial>(
    f: &F,
    lo: f64,
    hi: f64,
    cfg: &QuadratureConfig,
) -> Result<Option<Complex64>, QuadratureError> {
    let nested = cfg.nested();
    let f = |t: f64| f(t, &nested);
    let piece = |a: f64, b: f64| -> Result<Option<Complex64>, QuadratureError> {
        let (a, b) = (a.max(lo), b.min(hi));
        if a >= b {
            return Ok(Some(Complex64::new(0.0, 0.0)));
        }
        match adaptive(&f, a, b, FINITE_PANELS, cfg) {
            Ok(o) => Ok(Some(o.value)),
            Err(Interrupt::Diverged) => Ok(None),
            Err(Interrupt::Failed(e)) => Err(e),
        }
    };
    let finite_end = [lo, hi]
        .iter()
        .filter(|x| x.is_finite())
        .fold(0.0_f64, |m, x| m.max(x.abs()));
    let mut half_width = (2.0 * finite_end).max(1.0);
    let Some(mut sum) = piece(-half_width, half_width)? else {
        return Ok(Some(Complex64::new(f64::INFINITY, 0.0)));
    };
    let mut history = vec![sum.norm()];
    let mut settled = 0;
    for _ in 0..MAX_DOUBLINGS {
        let right = piece(half_width, 2.0 * half_width)?;
        let left = piece(-2.0 * half_width, -half_width)?;
        let (Some(right), Some(left)) = (right, left) else {
            return Ok(Some(sum));
        };
        let increment = right + left;
        sum += increment;
        half_width *= 2.0;
        history.push(sum.norm());
        let n = history.len();
        if sum.norm() > cfg.divergence_threshold
            && n > MONOTONE_RUN
            && history[n - MONOTONE_RUN - 1..].windows(2).all(|w| w[1] > w[0])
        {
            return Ok(Some(sum));
        }
        if increment.norm() <= 1e-12 * sum.norm().max(1.0) {
            settled += 1;
            if settled >= 3 {
                break;
            }
        } else {
            settled = 0;
        }
    }
    Ok(None)
}

/// ∫_ℝ f(t) dt.
pub fn integrate_line<F>(f: F, cfg: &QuadratureConfig) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn(f64) -> Complex64,
{
    integrate_interval(f, f64::NEG_INFINITY, f64::INFINITY, cfg)
}

/// ∫_lo^hi f(t) dt where either bound may be infinite.
pub fn integrate_interval<F>(
    f: F,
    lo: f64,
    hi: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn(f64) -> Complex64,
{
    cfg.validate()?;
    let g = |t: f64, _: &QuadratureConfig| checked(f(t), &[t]);
    let r = line(&g, lo, hi, cfg)?;
    Ok(finish(r, &Cell::new(true), cfg))
}

/// Iterated integral over ℝ^k. `order[0]` is the innermost axis and
/// `order[k-1]` the outermost; `k = order.len()`.
pub fn integrate_iterated<F>(
    f: F,
    order: &[usize],
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn(&[f64]) -> Complex64,
{
    cfg.validate()?;
    let dim = order.len();
    let mut seen = vec![false; dim];
    for &axis in order {
        if axis >= dim || seen[axis] {
            return Err(QuadratureError::InvalidOrder {
                order: order.to_vec(),
                dim,
            });
        }
        seen[axis] = true;
    }
    let point = RefCell::new(vec![0.0; dim]);
    let inner_ok = Cell::new(true);
    let outer_to_inner: Vec<usize> = order.iter().rev().copied().collect();
    let leaf = |_: &QuadratureConfig| {
        let p = point.borrow();
        checked(f(&p), &p)
    };
    let r = nest_axes(&point, &outer_to_inner, &leaf, cfg, &inner_ok)?;
    Ok(finish(r, &inner_ok, cfg))
}

/// Nested whole-line integrals over `axes` (outermost first) writing into
/// `point`, with `leaf` evaluated at the innermost level.
pub(crate) fn nest_axes(
    point: &RefCell<Vec<f64>>,
    axes: &[usize],
    leaf: &dyn Fn(&QuadratureConfig) -> Partial,
    cfg: &QuadratureConfig,
    inner_ok: &Cell<bool>,
) -> Result<QuadratureResult, QuadratureError> {
    let ranges: Vec<(usize, f64, f64)> = axes
        .iter()
        .map(|&a| (a, f64::NEG_INFINITY, f64::INFINITY))
        .collect();
    nest_ranges(point, &ranges, leaf, cfg, inner_ok)
}

/// As [`nest_axes`] but over `[lo, hi]` per axis, given as `(axis, lo, hi)`.
pub(crate) fn nest_ranges(
    point: &RefCell<Vec<f64>>,
    ranges: &[(usize, f64, f64)],
    leaf: &dyn Fn(&QuadratureConfig) -> Partial,
    cfg: &QuadratureConfig,
    inner_ok: &Cell<bool>,
) -> Result<QuadratureResult, QuadratureError> {
    match ranges.split_first() {
        None => settle(leaf(cfg)),
        Some((&(axis, lo, hi), rest)) => {
            let g = |t: f64, inner_cfg: &QuadratureConfig| -> Partial {
                point.borrow_mut()[axis] = t;
                if rest.is_empty() {
                    leaf(inner_cfg)
                } else {
                    lift(nest_ranges(point, rest, leaf, inner_cfg, inner_ok), inner_ok)
                }
            };
            line(&g, lo, hi, cfg)
        }
    }
}
