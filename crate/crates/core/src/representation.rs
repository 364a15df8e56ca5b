//! Evaluation of `q(z) = a + Σ b_ℓ z_ℓ + π^{−n} ∫ K_n(z, t) dμ(t)`.

use std::cell::{Cell, RefCell};
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::convex_transform::{b_to_k, beta_n, k_to_b, ConvexCoefficients, ConvexError};
use crate::kernels::{k1_unchecked, kn_rational_unchecked, ktilde_md_unchecked, LadderKernelParams};
use crate::measures::{Measure, MeasureError};
use crate::point::{DomainError, PolyUpperPoint};
use crate::quadrature::{checked, finish, lift, nest_axes, QuadratureConfig, QuadratureError, QuadratureResult};
use crate::sampling;

pub const GROWTH_VIOLATION: &str = "measure violates growth condition (numerically)";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RepresentationError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("{GROWTH_VIOLATION}")]
    GrowthViolation,
    #[error("invalid representation data: {0}")]
    Invalid(String),
    #[error("convex weights: {0}")]
    Convex(String),
}

impl From<ConvexError> for RepresentationError {
    fn from(e: ConvexError) -> Self {
        RepresentationError::Convex(e.to_string())
    }
}

/// The triple `(a, b, μ)` with `b_ℓ ≥ 0` and `μ` on ℝ^n, `n = b.len()`.
#[derive(Debug, Clone)]
pub struct RepresentationData {
    a: f64,
    b: Vec<f64>,
    mu: Measure,
}

impl RepresentationData {
    pub fn new(a: f64, b: Vec<f64>, mu: Measure) -> Result<Self, RepresentationError> {
        if !a.is_finite() {
            return Err(RepresentationError::Invalid(format!("a must be finite, got {a}")));
        }
        if b.is_empty() {
            return Err(RepresentationError::Invalid("b must have at least one entry".into()));
        }
        if let Some(x) = b.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(RepresentationError::Invalid(format!("b entries must be non-negative, got {x}")));
        }
        mu.validate()?;
        if mu.dim() != b.len() {
            return Err(RepresentationError::Invalid(format!(
                "measure dimension {} does not match {} variables",
                mu.dim(),
                b.len()
            )));
        }
        Ok(Self { a, b, mu })
    }

    pub fn one_var(a: f64, b: f64, mu: Measure) -> Result<Self, RepresentationError> {
        Self::new(a, vec![b], mu)
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn mu(&self) -> &Measure {
        &self.mu
    }

    fn linear_part(&self, z: &PolyUpperPoint) -> Complex64 {
        self.a + z.weighted_sum(&self.b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub value: Complex64,
    pub error_estimate: f64,
    pub converged: bool,
}

/// How the measure integral is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMethod {
    /// Closed-form reductions where the measure's structure allows them,
    /// quadrature otherwise.
    #[default]
    Reduced,
    /// Literal iterated quadrature of the kernel against the measure.
    Quadrature,
}

fn into_evaluation(linear: Complex64, integral: QuadratureResult, n: usize) -> Result<Evaluation, RepresentationError> {
    if integral.diverged {
        return Err(RepresentationError::GrowthViolation);
    }
    let norm = PI.powi(n as i32);
    Ok(Evaluation {
        value: linear + integral.value / norm,
        error_estimate: integral.error_estimate / norm,
        converged: integral.converged,
    })
}

/// `∫ K_d(z, t) dμ(t)` by quadrature, `d = μ.dim()`.
fn kernel_quadrature(mu: &Measure, z: &[Complex64], cfg: &QuadratureConfig) -> Result<QuadratureResult, QuadratureError> {
    if z.len() == 1 {
        let z = z[0];
        mu.integrate(|t| k1_unchecked(z, t[0]), cfg)
    } else {
        mu.integrate(|t| kn_rational_unchecked(z, t), cfg)
    }
}

/// Evaluates `q(z)` by literal quadrature. Atomic measures are summed exactly.
pub fn eval(data: &RepresentationData, z: &PolyUpperPoint, cfg: &QuadratureConfig) -> Result<Evaluation, RepresentationError> {
    eval_with(data, z, cfg, EvalMethod::Quadrature)
}

/// Evaluates `q(z)`, integrating Lebesgue axes and ladder pushforwards in
/// closed form: each Lebesgue axis contributes a factor π and removes its
/// variable, and a ladder measure collapses to a one-variable integral.
pub fn eval_reduced(
    data: &RepresentationData,
    z: &PolyUpperPoint,
    cfg: &QuadratureConfig,
) -> Result<Evaluation, RepresentationError> {
    eval_with(data, z, cfg, EvalMethod::Reduced)
}

pub fn eval_with(
    data: &RepresentationData,
    z: &PolyUpperPoint,
    cfg: &QuadratureConfig,
    method: EvalMethod,
) -> Result<Evaluation, RepresentationError> {
    z.check_dim(data.dim())?;
    cfg.validate()?;
    let integral = match method {
        EvalMethod::Quadrature => kernel_quadrature(&data.mu, z.coords(), cfg)?,
        EvalMethod::Reduced => kernel_reduced(&data.mu, z.coords(), cfg)?,
    };
    into_evaluation(data.linear_part(z), integral, data.dim())
}

/// `∫ K_d(z, t) dμ(t)` with closed-form reductions. `K_0 ≡ i`.
fn kernel_reduced(mu: &Measure, z: &[Complex64], cfg: &QuadratureConfig) -> Result<QuadratureResult, QuadratureError> {
    let i = Complex64::i();
    match mu {
        Measure::LebesgueDensity { dim, density } if density.is_unit() => {
            Ok(QuadratureResult::exact(i * PI.powi(*dim as i32)))
        }
        Measure::Product { factors } => {
            let mut offset = 0;
            let mut lebesgue_axes = 0;
            let mut rest = Vec::new();
            let mut rest_z = Vec::new();
            for f in factors {
                let d = f.dim();
                match f {
                    Measure::LebesgueDensity { density, .. } if density.is_unit() => lebesgue_axes += d,
                    _ => {
                        rest.push(f.clone());
                        rest_z.extend_from_slice(&z[offset..offset + d]);
                    }
                }
                offset += d;
            }
            let factor = PI.powi(lebesgue_axes as i32);
            let inner = match rest.len() {
                0 => QuadratureResult::exact(i),
                1 => kernel_reduced(&rest[0], &rest_z, cfg)?,
                _ if lebesgue_axes == 0 => kernel_quadrature(mu, z, cfg)?,
                _ => kernel_reduced(&Measure::Product { factors: rest }, &rest_z, cfg)?,
            };
            Ok(inner.scaled(factor))
        }
        Measure::Padded { dim, inner_axes, inner } => {
            let sub: Vec<Complex64> = inner_axes.iter().map(|&a| z[a]).collect();
            let factor = PI.powi((*dim - inner_axes.len()) as i32);
            Ok(kernel_reduced(inner, &sub, cfg)?.scaled(factor))
        }
        Measure::PushforwardLadder { base, b, scale } => {
            let n = b.len() + 1;
            let k = b_to_k(b);
            let w: Complex64 = z.iter().zip(k.values()).map(|(zl, kl)| zl * kl).sum();
            let factor = scale * PI.powi(n as i32 - 1) / beta_n(b);
            Ok(kernel_reduced(base, &[w], cfg)?.scaled(factor))
        }
        _ => kernel_quadrature(mu, z, cfg),
    }
}

/// `a + Σ k_ℓ b z_ℓ + (β_n/π^n) ∫ (∫ K̃_n^0(z, t) dt_n…dt₂) dμ(t₁)` for
/// one-variable data and strictly positive weights, by iterated quadrature.
pub fn eval_convex_form(
    data: &RepresentationData,
    k: &ConvexCoefficients,
    z: &PolyUpperPoint,
    cfg: &QuadratureConfig,
) -> Result<Evaluation, RepresentationError> {
    if data.dim() != 1 {
        return Err(RepresentationError::Invalid(format!(
            "expected one-variable data, got {} variables",
            data.dim()
        )));
    }
    cfg.validate()?;
    let n = k.len();
    z.check_dim(n)?;
    let b = k_to_b(k)?;
    let beta = beta_n(&b);
    let params = LadderKernelParams::new(n, 0, &b).map_err(|e| RepresentationError::Invalid(e.to_string()))?;
    let linear = data.a + z.weighted_sum(&k.values().iter().map(|kl| kl * data.b[0]).collect::<Vec<_>>());

    let zc = z.coords();
    let local = RefCell::new(vec![0.0; n]);
    let ok = Cell::new(true);
    let kernel = |_: &QuadratureConfig| {
        let t = local.borrow();
        checked(ktilde_md_unchecked(zc, &t, &params), &t)
    };
    let free: Vec<usize> = (1..n).collect();
    let over_rest = |c: &QuadratureConfig| lift(nest_axes(&local, &free, &kernel, c, &ok), &ok);
    let integral = data.mu.integrate_into(&local, &[0], &over_rest, cfg, &ok)?;
    let integral = finish(integral, &ok, cfg).scaled(beta);
    into_evaluation(linear, integral, n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HerglotzReport {
    pub samples: usize,
    pub evaluated: usize,
    pub min_im: f64,
    pub argmin: Vec<Complex64>,
    /// Points whose evaluation failed, with the reason.
    pub failures: Vec<(Vec<Complex64>, String)>,
    pub passed: bool,
}

/// Smallest imaginary part allowed for a sample to count as non-negative.
pub const HERGLOTZ_TOLERANCE: f64 = 1e-10;

/// Samples `z ∈ ℂ^{+n}` (real parts in `[−10, 10]`, imaginary in `[0.1, 10]`)
/// and records the smallest `Im q(z)`.
pub fn check_herglotz(data: &RepresentationData, samples: usize, seed: u64, cfg: &QuadratureConfig) -> HerglotzReport {
    let mut rng = sampling::rng(seed);
    let mut report = HerglotzReport {
        samples,
        evaluated: 0,
        min_im: f64::INFINITY,
        argmin: vec![],
        failures: vec![],
        passed: true,
    };
    for _ in 0..samples {
        let z = sampling::poly_upper_point(&mut rng, data.dim(), (-10.0, 10.0), (0.1, 10.0));
        match eval_reduced(data, &z, cfg) {
            Ok(e) => {
                report.evaluated += 1;
                if e.value.im < report.min_im {
                    report.min_im = e.value.im;
                    report.argmin = z.coords().to_vec();
                }
            }
            Err(err) => report.failures.push((z.into_inner(), err.to_string())),
        }
    }
    report.passed = report.failures.is_empty() && report.min_im >= -HERGLOTZ_TOLERANCE;
    report
}
