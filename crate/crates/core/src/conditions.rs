//! Growth and Nevanlinna conditions, and the classification of
//! two-dimensional pushforward measures as representing measures.
//!
//! Both conditions quantify over all `z ∈ ℂ^{+n}` or involve integrals whose
//! divergence can only be detected heuristically. The checks here evaluate
//! them on a fixed quasi-random grid, which is the strongest surrogate a
//! numerical library can offer; a pass is evidence, not proof.

use std::fmt;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::measures::{mass, AxisBox, MassError, Measure, MeasureError};
use crate::point::{DomainError, PolyUpperPoint};
use crate::quadrature::{QuadratureConfig, QuadratureError, QuadratureResult};
use crate::sampling;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConditionError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Mass(#[from] MassError),
    #[error("inconsistent measure traits: {0}")]
    InconsistentTraits(&'static str),
    #[error("expected a measure on ℝ^{expected}, got ℝ^{found}")]
    Dimension { expected: usize, found: usize },
    #[error("the cubic condition needs αδ − βγ ≠ 0")]
    DegenerateCubic,
}

/// Absolute floor of the "≈ 0" yardstick.
pub const ZERO_ABS: f64 = 1e-8;
/// Relative part of the "≈ 0" yardstick, against `∫ |integrand| dμ`.
pub const ZERO_REL: f64 = 1e-6;
/// Size of the z-grid used for conditions required "for all z".
pub const GRID_POINTS: usize = 25;

fn check_dim(mu: &Measure, expected: usize) -> Result<(), ConditionError> {
    if mu.dim() != expected {
        return Err(ConditionError::Dimension {
            expected,
            found: mu.dim(),
        });
    }
    Ok(())
}

/// `∫ Π 1/(1 + t_j²) dμ(t)`; `diverged` signals a numerical violation.
pub fn check_growth(mu: &Measure, cfg: &QuadratureConfig) -> Result<QuadratureResult, ConditionError> {
    mu.validate()?;
    Ok(mu.integrate(
        |t| Complex64::new(t.iter().map(|x| 1.0 / (1.0 + x * x)).product(), 0.0),
        cfg,
    )?)
}

/// An integral that should vanish, with the yardstick it is judged against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VanishingIntegral {
    pub value: Complex64,
    /// `∫ |integrand| dμ`, or the sum of such integrals over the terms.
    pub magnitude: f64,
    pub error_estimate: f64,
    pub converged: bool,
    pub diverged: bool,
}

impl VanishingIntegral {
    /// Integrates `∫ |f| dμ` first, then `∫ f dμ` to an absolute accuracy a
    /// thousandth of the zero threshold. A vanishing integral cannot meet a
    /// purely relative tolerance, and the default absolute one is far finer
    /// than the decision needs.
    fn measure<F: Fn(&[f64]) -> Complex64>(mu: &Measure, f: F, cfg: &QuadratureConfig) -> Result<Self, ConditionError> {
        Self::measure_with(mu, &f, |t| f(t).norm(), cfg)
    }

    /// As [`Self::measure`] with the yardstick integrand `modulus` given separately.
    fn measure_with<F, G>(mu: &Measure, f: F, modulus: G, cfg: &QuadratureConfig) -> Result<Self, ConditionError>
    where
        F: Fn(&[f64]) -> Complex64,
        G: Fn(&[f64]) -> f64,
    {
        let magnitude = mu.integrate(|t| Complex64::new(modulus(t), 0.0), cfg)?;
        if magnitude.diverged {
            return Ok(Self::from_parts(magnitude, magnitude));
        }
        let threshold = ZERO_ABS.max(ZERO_REL * magnitude.value.re);
        let value_cfg = QuadratureConfig {
            abs_tol: cfg.abs_tol.max(1e-3 * threshold),
            ..*cfg
        };
        Ok(Self::from_parts(mu.integrate(f, &value_cfg)?, magnitude))
    }

    fn from_parts(value: QuadratureResult, magnitude: QuadratureResult) -> Self {
        Self {
            value: value.value,
            magnitude: magnitude.value.re,
            error_estimate: value.error_estimate,
            converged: value.converged && magnitude.converged,
            diverged: value.diverged || magnitude.diverged,
        }
    }

    /// `max(1e-8, 1e-6 · magnitude)`.
    pub fn threshold(&self) -> f64 {
        ZERO_ABS.max(ZERO_REL * self.magnitude)
    }

    /// `|value| ≤ max(1e-8, 1e-6 · magnitude)` and the integral exists.
    pub fn is_zero(&self) -> bool {
        !self.diverged && self.value.norm() <= self.threshold()
    }
}

/// `∫ dμ / ((t₁ − z₁)² (t₂ − z̄₂)²)` for `μ` on ℝ².
pub fn check_nevanlinna_2var(
    mu: &Measure,
    z1: Complex64,
    z2: Complex64,
    cfg: &QuadratureConfig,
) -> Result<VanishingIntegral, ConditionError> {
    check_dim(mu, 2)?;
    PolyUpperPoint::new(vec![z1, z2])?;
    let w2 = z2.conj();
    VanishingIntegral::measure(mu, |t| 1.0 / ((t[0] - z1).powi(2) * (t[1] - w2).powi(2)), cfg)
}

/// The three factors `N_{−1}, N_0, N_1` at one coordinate.
fn nevanlinna_factors(z: Complex64, t: f64) -> [Complex64; 3] {
    let i = Complex64::i();
    let upper = 1.0 / (t - i);
    let lower = 1.0 / (t + i);
    [1.0 / (t - z) - upper, upper - lower, lower - 1.0 / (t - z.conj())]
}

/// Number of sign patterns `ρ ∈ {−1, 0, 1}^n` containing both −1 and 1.
pub fn nevanlinna_term_count(n: usize) -> usize {
    3usize.pow(n as u32) - 2 * 2usize.pow(n as u32) + 1
}

/// Sum over all `ρ ∈ {−1, 0, 1}^n` containing both −1 and 1 of
/// `∫ Π_j N_{ρ_j, j} dμ`.
pub fn check_nevanlinna_nvar(
    mu: &Measure,
    z: &PolyUpperPoint,
    cfg: &QuadratureConfig,
) -> Result<VanishingIntegral, ConditionError> {
    let n = z.dim();
    check_dim(mu, n)?;
    let zc = z.coords();
    // Σ over qualifying ρ = all − (no −1) − (no 1) + (only 0)
    let summed = |t: &[f64]| {
        let mut all = Complex64::new(1.0, 0.0);
        let mut no_minus = all;
        let mut no_plus = all;
        let mut zeros = all;
        for (j, &tj) in t.iter().enumerate() {
            let [m, o, p] = nevanlinna_factors(zc[j], tj);
            all *= m + o + p;
            no_minus *= o + p;
            no_plus *= m + o;
            zeros *= o;
        }
        all - no_minus - no_plus + zeros
    };
    let term_moduli = |t: &[f64]| {
        let factors: Vec<[Complex64; 3]> = t.iter().enumerate().map(|(j, &tj)| nevanlinna_factors(zc[j], tj)).collect();
        let mut total = 0.0;
        for code in 0..3usize.pow(n as u32) {
            let mut c = code;
            let (mut has_minus, mut has_plus) = (false, false);
            let mut prod = 1.0;
            for f in &factors {
                let digit = c % 3;
                c /= 3;
                has_minus |= digit == 0;
                has_plus |= digit == 2;
                prod *= f[digit].norm();
            }
            if has_minus && has_plus {
                total += prod;
            }
        }
        total
    };
    VanishingIntegral::measure_with(mu, summed, term_moduli, cfg)
}

/// Deterministic quasi-random grid of `count` points in ℂ^{+n} with real parts
/// in `[−10, 10]` and imaginary parts in `[0.1, 10]`.
pub fn z_grid(n: usize, count: usize) -> Vec<PolyUpperPoint> {
    sampling::halton(count, 2 * n)
        .into_iter()
        .map(|h| {
            let coords = (0..n)
                .map(|j| Complex64::new(-10.0 + 20.0 * h[2 * j], 0.1 + 9.9 * h[2 * j + 1]))
                .collect();
            PolyUpperPoint::new(coords).expect("grid imaginary parts are positive")
        })
        .collect()
}

/// Regions of the coefficient space in which a pushforward measure can
/// represent a Herglotz-Nevanlinna function, given suitable `μ₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CaseLabel {
    #[serde(rename = "i1")]
    I1,
    #[serde(rename = "i2")]
    I2,
    #[serde(rename = "ii1")]
    Ii1,
    #[serde(rename = "ii2")]
    Ii2,
    #[serde(rename = "iii1a")]
    Iii1a,
    #[serde(rename = "iii1b")]
    Iii1b,
    #[serde(rename = "iii2a")]
    Iii2a,
    #[serde(rename = "iii2b")]
    Iii2b,
    NotRepresenting,
}

impl CaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseLabel::I1 => "i1",
            CaseLabel::I2 => "i2",
            CaseLabel::Ii1 => "ii1",
            CaseLabel::Ii2 => "ii2",
            CaseLabel::Iii1a => "iii1a",
            CaseLabel::Iii1b => "iii1b",
            CaseLabel::Iii2a => "iii2a",
            CaseLabel::Iii2b => "iii2b",
            CaseLabel::NotRepresenting => "NotRepresenting",
        }
    }
}

impl fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What is known about the base measure `μ₁`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MeasureTraits {
    pub is_zero: bool,
    pub is_finite: bool,
    pub satisfies_1var_growth: bool,
    /// `None` when unknown.
    pub satisfies_cubic_condition: Option<bool>,
}

impl MeasureTraits {
    pub fn validate(&self) -> Result<(), ConditionError> {
        if self.is_zero && !self.is_finite {
            return Err(ConditionError::InconsistentTraits("a zero measure is finite"));
        }
        if self.is_finite && !self.satisfies_1var_growth {
            return Err(ConditionError::InconsistentTraits("a finite measure satisfies the growth condition"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Representing,
    NotRepresenting,
    /// The cubic condition was needed but not available.
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Classification {
    /// Coefficient region, `None` when `β = δ = 0`.
    pub region: Option<CaseLabel>,
    /// The region if `μ₁` meets its requirement, `NotRepresenting` otherwise.
    pub label: CaseLabel,
    pub verdict: Verdict,
}

fn is_zero_det(alpha: f64, beta: f64, gamma: f64, delta: f64) -> bool {
    let det = alpha * delta - beta * gamma;
    det.abs() <= 1e-14 * (alpha * delta).abs().max((beta * gamma).abs())
}

/// The coefficient region alone.
pub fn coefficient_region(coefficients: [f64; 4]) -> Option<CaseLabel> {
    let [alpha, beta, gamma, delta] = coefficients;
    let det_zero = is_zero_det(alpha, beta, gamma, delta);
    match (beta == 0.0, delta == 0.0) {
        (true, true) => None,
        (true, false) => Some(if alpha == 0.0 { CaseLabel::I1 } else { CaseLabel::I2 }),
        (false, true) => Some(if gamma == 0.0 { CaseLabel::Ii1 } else { CaseLabel::Ii2 }),
        (false, false) if beta * delta < 0.0 => Some(if det_zero { CaseLabel::Iii1a } else { CaseLabel::Iii1b }),
        (false, false) => Some(if det_zero { CaseLabel::Iii2a } else { CaseLabel::Iii2b }),
    }
}

/// Decides whether the pushforward with coefficients `[α, β, γ, δ]` and base
/// `μ₁` with the given traits represents a Herglotz-Nevanlinna function.
pub fn classify_pushforward2d(coefficients: [f64; 4], traits: &MeasureTraits) -> Result<Classification, ConditionError> {
    traits.validate()?;
    let region = coefficient_region(coefficients);
    let verdict = match region {
        None => Verdict::NotRepresenting,
        Some(CaseLabel::I1 | CaseLabel::Ii1 | CaseLabel::Iii1a) => holds(traits.is_finite),
        Some(CaseLabel::I2 | CaseLabel::Ii2 | CaseLabel::Iii1b) => holds(traits.satisfies_1var_growth),
        Some(CaseLabel::Iii2a) => holds(traits.is_zero),
        Some(CaseLabel::Iii2b) => {
            if !traits.satisfies_1var_growth {
                Verdict::NotRepresenting
            } else {
                match traits.satisfies_cubic_condition {
                    Some(c) => holds(c),
                    None => Verdict::Indeterminate,
                }
            }
        }
        Some(CaseLabel::NotRepresenting) => unreachable!("regions are never NotRepresenting"),
    };
    let label = match (region, verdict) {
        (Some(r), Verdict::Representing | Verdict::Indeterminate) => r,
        _ => CaseLabel::NotRepresenting,
    };
    Ok(Classification { region, label, verdict })
}

fn holds(b: bool) -> Verdict {
    if b {
        Verdict::Representing
    } else {
        Verdict::NotRepresenting
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CubicCheck {
    pub holds: bool,
    pub max_modulus: f64,
    /// Yardstick at the point of largest modulus.
    pub threshold: f64,
    pub diverged: bool,
}

/// `∫ dμ₁(t) / ((αδ − βγ)t − δz₁ + βz̄₂)³ = 0` at every grid point.
pub fn check_cubic_condition(
    det: f64,
    delta: f64,
    beta: f64,
    mu1: &Measure,
    samples: &[(Complex64, Complex64)],
    cfg: &QuadratureConfig,
) -> Result<CubicCheck, ConditionError> {
    if det == 0.0 {
        return Err(ConditionError::DegenerateCubic);
    }
    check_dim(mu1, 1)?;
    let mut out = CubicCheck {
        holds: true,
        max_modulus: 0.0,
        threshold: ZERO_ABS,
        diverged: false,
    };
    for &(z1, z2) in samples {
        PolyUpperPoint::new(vec![z1, z2])?;
        let shift = -delta * z1 + beta * z2.conj();
        let f = |t: &[f64]| 1.0 / (det * t[0] + shift).powi(3);
        let v = VanishingIntegral::measure(mu1, f, cfg)?;
        if v.diverged {
            out.diverged = true;
            out.holds = false;
            continue;
        }
        if v.value.norm() >= out.max_modulus {
            out.max_modulus = v.value.norm();
            out.threshold = v.threshold();
        }
        out.holds &= v.is_zero();
    }
    Ok(out)
}

/// Pairs `(z₁, z₂)` of the standard two-variable grid.
pub fn pair_grid() -> Vec<(Complex64, Complex64)> {
    z_grid(2, GRID_POINTS).iter().map(|p| (p.coords()[0], p.coords()[1])).collect()
}

/// Traits of `μ₁` established numerically. The cubic condition is only
/// evaluated when the coefficients fall in the region that needs it.
pub fn derive_traits(coefficients: [f64; 4], mu1: &Measure, cfg: &QuadratureConfig) -> Result<MeasureTraits, ConditionError> {
    check_dim(mu1, 1)?;
    let is_zero = mu1.is_zero();
    let total = mass(mu1, &[AxisBox::from_intervals(&[(f64::NEG_INFINITY, f64::INFINITY)])?], cfg)?;
    let is_finite = is_zero || !total.diverged;
    let growth = check_growth(mu1, cfg)?;
    let satisfies_1var_growth = is_finite || (!growth.diverged && growth.converged);
    let satisfies_cubic_condition = if coefficient_region(coefficients) == Some(CaseLabel::Iii2b) {
        let [alpha, beta, gamma, delta] = coefficients;
        Some(check_cubic_condition(alpha * delta - beta * gamma, delta, beta, mu1, &pair_grid(), cfg)?.holds)
    } else {
        None
    };
    Ok(MeasureTraits {
        is_zero,
        is_finite,
        satisfies_1var_growth,
        satisfies_cubic_condition,
    })
}

/// Numerical evidence for the two-variable conditions of a pushforward measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evidence {
    pub growth: QuadratureResult,
    pub growth_finite: bool,
    /// Largest `|∫ dμ/((t₁ − z₁)²(t₂ − z̄₂)²)|` over the grid.
    pub nevanlinna_max: f64,
    /// `∫ |integrand| dμ` at the grid point attaining the maximum.
    pub nevanlinna_scale: f64,
    pub nevanlinna_zero: bool,
    pub nevanlinna_diverged: bool,
}

impl Evidence {
    /// Both conditions hold numerically.
    pub fn supports_representing(&self) -> bool {
        self.growth_finite && self.nevanlinna_zero
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub classification: Classification,
    pub traits: MeasureTraits,
    pub derived_traits: MeasureTraits,
    /// Declared traits that disagree with the numerics.
    pub conflicts: Vec<String>,
    pub evidence: Evidence,
}

/// Growth integral and the Nevanlinna integral over the z-grid.
pub fn gather_evidence(mu: &Measure, cfg: &QuadratureConfig) -> Result<Evidence, ConditionError> {
    check_dim(mu, 2)?;
    let growth = check_growth(mu, cfg)?;
    let mut ev = Evidence {
        growth,
        growth_finite: !growth.diverged && growth.converged,
        nevanlinna_max: 0.0,
        nevanlinna_scale: 0.0,
        nevanlinna_zero: true,
        nevanlinna_diverged: false,
    };
    for (z1, z2) in pair_grid() {
        let v = check_nevanlinna_2var(mu, z1, z2, cfg)?;
        if v.diverged {
            ev.nevanlinna_diverged = true;
            ev.nevanlinna_zero = false;
            continue;
        }
        if v.value.norm() >= ev.nevanlinna_max {
            ev.nevanlinna_max = v.value.norm();
            ev.nevanlinna_scale = v.magnitude;
        }
        ev.nevanlinna_zero &= v.is_zero();
    }
    Ok(ev)
}

/// Classifies the pushforward of `μ₁`, deriving the traits numerically.
/// Declared traits take precedence; disagreements are listed in the report.
pub fn classify_with_evidence(
    coefficients: [f64; 4],
    mu1: &Measure,
    declared: Option<MeasureTraits>,
    cfg: &QuadratureConfig,
) -> Result<ClassificationReport, ConditionError> {
    let derived = derive_traits(coefficients, mu1, cfg)?;
    let mut conflicts = Vec::new();
    let traits = match declared {
        None => derived,
        Some(d) => {
            d.validate()?;
            let mut note = |name: &str, a: bool, b: bool| {
                if a != b {
                    conflicts.push(format!("{name}: declared {a}, numerics say {b}"));
                }
            };
            note("is_zero", d.is_zero, derived.is_zero);
            note("is_finite", d.is_finite, derived.is_finite);
            note("satisfies_1var_growth", d.satisfies_1var_growth, derived.satisfies_1var_growth);
            if let (Some(a), Some(b)) = (d.satisfies_cubic_condition, derived.satisfies_cubic_condition) {
                note("satisfies_cubic_condition", a, b);
            }
            MeasureTraits {
                satisfies_cubic_condition: d.satisfies_cubic_condition.or(derived.satisfies_cubic_condition),
                ..d
            }
        }
    };
    let classification = classify_pushforward2d(coefficients, &traits)?;
    let evidence = gather_evidence(&Measure::pushforward_2d(mu1.clone(), coefficients)?, cfg)?;
    Ok(ClassificationReport {
        classification,
        traits,
        derived_traits: derived,
        conflicts,
        evidence,
    })
}
