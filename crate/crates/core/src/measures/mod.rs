//! Positive Borel measures on ℝ^k built from atoms, Lebesgue densities,
//! products and affine pushforwards.
//!
//! Integration against a pushforward unfolds into an iterated integral with
//! the Lebesgue variables innermost and the base measure outermost. That
//! nesting is fixed; nothing here reorders it.

mod expr;
mod mass;

use std::cell::{Cell, RefCell};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

pub use expr::{DensityExpr, ExprError};
pub use mass::{mass, AxisBox, MassError};

use crate::convex_transform::LadderCoefficients;
use crate::quadrature::{
    checked, finish, lift, line, nest_axes, settle, Estimate, Interrupt, Partial, QuadratureConfig,
    QuadratureError, QuadratureResult,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("measure dimension must be at least 1")]
    ZeroDimension,
    #[error("atom weight must be positive and finite, got {0}")]
    BadWeight(f64),
    #[error("atom location must be finite")]
    BadLocation,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("pushforward coefficients must be finite")]
    BadCoefficients,
    #[error("ladder scale must be positive and finite, got {0}")]
    BadScale(f64),
    #[error("padding axes invalid: {0}")]
    BadAxes(String),
    #[error("density uses t{used} but the measure has dimension {dim}")]
    DensityArity { used: usize, dim: usize },
    #[error("product needs at least one factor")]
    EmptyProduct,
    #[error(transparent)]
    Expr(#[from] ExprError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub location: Vec<f64>,
    pub weight: f64,
}

impl Atom {
    pub fn new(location: Vec<f64>, weight: f64) -> Self {
        Self { location, weight }
    }
}

/// Non-negative density against Lebesgue measure.
#[derive(Clone)]
pub enum Density {
    Unit,
    Expr(DensityExpr),
    Function(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl Density {
    pub fn eval(&self, t: &[f64]) -> f64 {
        match self {
            Density::Unit => 1.0,
            Density::Expr(e) => e.eval(t),
            Density::Function(f) => f(t),
        }
    }

    pub fn is_unit(&self) -> bool {
        matches!(self, Density::Unit)
    }
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Density::Unit => f.write_str("Unit"),
            Density::Expr(e) => write!(f, "Expr({:?})", e.source()),
            Density::Function(_) => f.write_str("Function(..)"),
        }
    }
}

/// A measure on ℝ^dim. Build values through the checked constructors.
#[derive(Debug, Clone)]
pub enum Measure {
    /// Finite sum of weighted point masses. No atoms is the zero measure.
    Atomic { dim: usize, atoms: Vec<Atom> },
    LebesgueDensity { dim: usize, density: Density },
    /// Axes of the factors are concatenated in order.
    Product { factors: Vec<Measure> },
    /// `U ↦ ∫_ℝ ∫_ℝ χ_U(αt₁ + βt₂, γt₁ + δt₂) dt₂ dμ₁(t₁)`.
    Pushforward2D { base: Box<Measure>, coefficients: [f64; 4] },
    /// `U ↦ scale · ∫_ℝ ∫_{ℝ^{n−1}} χ_U(t₁ − b₁t₂, …, t₁ − b_{n−1}t_n, t₁ + … + t_n) dt_n…dt₂ dμ(t₁)`.
    PushforwardLadder {
        base: Box<Measure>,
        b: LadderCoefficients,
        scale: f64,
    },
    /// `inner` on the listed axes, Lebesgue measure on the remaining ones.
    /// The Lebesgue axes are integrated innermost.
    Padded {
        dim: usize,
        inner_axes: Vec<usize>,
        inner: Box<Measure>,
    },
}

impl Measure {
    pub fn atomic(dim: usize, atoms: Vec<Atom>) -> Result<Self, MeasureError> {
        let m = Measure::Atomic { dim, atoms };
        m.validate()?;
        Ok(m)
    }

    /// `weight · δ_location`.
    pub fn dirac(location: Vec<f64>, weight: f64) -> Result<Self, MeasureError> {
        Self::atomic(location.len(), vec![Atom::new(location, weight)])
    }

    pub fn zero(dim: usize) -> Self {
        Measure::Atomic { dim, atoms: vec![] }
    }

    pub fn lebesgue(dim: usize) -> Self {
        Measure::LebesgueDensity {
            dim,
            density: Density::Unit,
        }
    }

    pub fn with_density(dim: usize, density: Density) -> Result<Self, MeasureError> {
        let m = Measure::LebesgueDensity { dim, density };
        m.validate()?;
        Ok(m)
    }

    pub fn product(factors: Vec<Measure>) -> Result<Self, MeasureError> {
        let m = Measure::Product { factors };
        m.validate()?;
        Ok(m)
    }

    /// Coefficients in the order `[α, β, γ, δ]`.
    pub fn pushforward_2d(base: Measure, coefficients: [f64; 4]) -> Result<Self, MeasureError> {
        let m = Measure::Pushforward2D {
            base: Box::new(base),
            coefficients,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn pushforward_ladder(base: Measure, b: LadderCoefficients, scale: f64) -> Result<Self, MeasureError> {
        let m = Measure::PushforwardLadder {
            base: Box::new(base),
            b,
            scale,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn padded(dim: usize, inner_axes: Vec<usize>, inner: Measure) -> Result<Self, MeasureError> {
        let m = Measure::Padded {
            dim,
            inner_axes,
            inner: Box::new(inner),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        match self {
            Measure::Atomic { dim, .. } | Measure::LebesgueDensity { dim, .. } | Measure::Padded { dim, .. } => *dim,
            Measure::Product { factors } => factors.iter().map(Measure::dim).sum(),
            Measure::Pushforward2D { .. } => 2,
            Measure::PushforwardLadder { b, .. } => b.len() + 1,
        }
    }

    /// Structurally zero. A density that vanishes identically is not detected.
    pub fn is_zero(&self) -> bool {
        match self {
            Measure::Atomic { atoms, .. } => atoms.is_empty(),
            Measure::LebesgueDensity { .. } => false,
            Measure::Product { factors } => factors.iter().any(Measure::is_zero),
            Measure::Pushforward2D { base, .. } | Measure::PushforwardLadder { base, .. } => base.is_zero(),
            Measure::Padded { inner, .. } => inner.is_zero(),
        }
    }

    fn is_lebesgue(&self) -> bool {
        matches!(self, Measure::LebesgueDensity { .. })
    }

    pub fn validate(&self) -> Result<(), MeasureError> {
        match self {
            Measure::Atomic { dim, atoms } => {
                if *dim == 0 {
                    return Err(MeasureError::ZeroDimension);
                }
                for atom in atoms {
                    if atom.location.len() != *dim {
                        return Err(MeasureError::DimensionMismatch {
                            expected: *dim,
                            found: atom.location.len(),
                        });
                    }
                    if !(atom.weight > 0.0 && atom.weight.is_finite()) {
                        return Err(MeasureError::BadWeight(atom.weight));
                    }
                    if atom.location.iter().any(|x| !x.is_finite()) {
                        return Err(MeasureError::BadLocation);
                    }
                }
            }
            Measure::LebesgueDensity { dim, density } => {
                if *dim == 0 {
                    return Err(MeasureError::ZeroDimension);
                }
                if let Density::Expr(e) = density {
                    if e.arity() > *dim {
                        return Err(MeasureError::DensityArity {
                            used: e.arity(),
                            dim: *dim,
                        });
                    }
                }
            }
            Measure::Product { factors } => {
                if factors.is_empty() {
                    return Err(MeasureError::EmptyProduct);
                }
                for f in factors {
                    f.validate()?;
                }
            }
            Measure::Pushforward2D { base, coefficients } => {
                base.validate()?;
                if base.dim() != 1 {
                    return Err(MeasureError::DimensionMismatch {
                        expected: 1,
                        found: base.dim(),
                    });
                }
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(MeasureError::BadCoefficients);
                }
            }
            Measure::PushforwardLadder { base, scale, .. } => {
                base.validate()?;
                if base.dim() != 1 {
                    return Err(MeasureError::DimensionMismatch {
                        expected: 1,
                        found: base.dim(),
                    });
                }
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(MeasureError::BadScale(*scale));
                }
            }
            Measure::Padded { dim, inner_axes, inner } => {
                inner.validate()?;
                if inner_axes.len() != inner.dim() {
                    return Err(MeasureError::DimensionMismatch {
                        expected: inner.dim(),
                        found: inner_axes.len(),
                    });
                }
                let mut seen = vec![false; *dim];
                for &a in inner_axes {
                    if a >= *dim || seen[a] {
                        return Err(MeasureError::BadAxes(format!("{inner_axes:?} within dimension {dim}")));
                    }
                    seen[a] = true;
                }
            }
        }
        Ok(())
    }

    /// `∫ f dμ` as an iterated integral.
    pub fn integrate<F>(&self, f: F, cfg: &QuadratureConfig) -> Result<QuadratureResult, QuadratureError>
    where
        F: Fn(&[f64]) -> Complex64,
    {
        self.integrate_partial(&|t: &[f64]| checked(f(t), t), cfg)
    }

    pub(crate) fn integrate_partial(
        &self,
        f: &dyn Fn(&[f64]) -> Partial,
        cfg: &QuadratureConfig,
    ) -> Result<QuadratureResult, QuadratureError> {
        cfg.validate()?;
        let dim = self.dim();
        let point = RefCell::new(vec![0.0; dim]);
        let axes: Vec<usize> = (0..dim).collect();
        let ok = Cell::new(true);
        let leaf = |_: &QuadratureConfig| {
            let p = point.borrow().clone();
            f(&p)
        };
        let r = self.integrate_into(&point, &axes, &leaf, cfg, &ok)?;
        Ok(finish(r, &ok, cfg))
    }

    /// Integrates `cont` against this measure, writing coordinate `i` of the
    /// measure into `point[axes[i]]` before each call.
    pub(crate) fn integrate_into(
        &self,
        point: &RefCell<Vec<f64>>,
        axes: &[usize],
        cont: &dyn Fn(&QuadratureConfig) -> Partial,
        cfg: &QuadratureConfig,
        ok: &Cell<bool>,
    ) -> Result<QuadratureResult, QuadratureError> {
        match self {
            Measure::Atomic { atoms, .. } => {
                let mut value = Complex64::new(0.0, 0.0);
                let mut error = 0.0;
                for atom in atoms {
                    {
                        let mut p = point.borrow_mut();
                        for (&a, &x) in axes.iter().zip(&atom.location) {
                            p[a] = x;
                        }
                    }
                    match cont(cfg) {
                        Ok(e) => {
                            value += e.value * atom.weight;
                            error += e.error * atom.weight;
                        }
                        Err(Interrupt::Diverged) => return Ok(QuadratureResult::divergent(value)),
                        Err(Interrupt::Failed(e)) => return Err(e),
                    }
                }
                Ok(QuadratureResult {
                    value,
                    error_estimate: error,
                    converged: true,
                    diverged: false,
                })
            }
            Measure::LebesgueDensity { density, .. } => {
                if density.is_unit() {
                    return nest_axes(point, axes, cont, cfg, ok);
                }
                let weighted = |c: &QuadratureConfig| -> Partial {
                    let coords: Vec<f64> = {
                        let p = point.borrow();
                        axes.iter().map(|&a| p[a]).collect()
                    };
                    let w = density.eval(&coords);
                    if !(w >= 0.0 && w.is_finite()) {
                        return Err(Interrupt::Failed(QuadratureError::InvalidIntegrand {
                            point: coords,
                            reason: "density negative or not finite",
                        }));
                    }
                    if w == 0.0 {
                        return Ok(Estimate::exact(Complex64::new(0.0, 0.0)));
                    }
                    let e = cont(c)?;
                    Ok(Estimate {
                        value: e.value * w,
                        error: e.error * w,
                    })
                };
                nest_axes(point, axes, &weighted, cfg, ok)
            }
            Measure::Product { factors } => {
                let mut placed = Vec::with_capacity(factors.len());
                let mut offset = 0;
                for f in factors {
                    placed.push((f, &axes[offset..offset + f.dim()]));
                    offset += f.dim();
                }
                // Lebesgue factors innermost.
                placed.sort_by_key(|(f, _)| f.is_lebesgue());
                product_into(&placed, point, cont, cfg, ok)
            }
            Measure::Pushforward2D { base, coefficients } => {
                let [alpha, beta, gamma, delta] = *coefficients;
                let (a0, a1) = (axes[0], axes[1]);
                let base_point = RefCell::new(vec![0.0]);
                let over_t2 = |c: &QuadratureConfig| -> Partial {
                    let t1 = base_point.borrow()[0];
                    let g = |t2: f64, inner_cfg: &QuadratureConfig| -> Partial {
                        {
                            let mut p = point.borrow_mut();
                            p[a0] = alpha * t1 + beta * t2;
                            p[a1] = gamma * t1 + delta * t2;
                        }
                        cont(inner_cfg)
                    };
                    lift(line(&g, f64::NEG_INFINITY, f64::INFINITY, c), ok)
                };
                base.integrate_into(&base_point, &[0], &over_t2, cfg, ok)
            }
            Measure::PushforwardLadder { base, b, scale } => {
                let b = b.values();
                let n = b.len() + 1;
                let local = RefCell::new(vec![0.0; n]);
                let image = |c: &QuadratureConfig| -> Partial {
                    {
                        let t = local.borrow();
                        let mut p = point.borrow_mut();
                        for j in 0..n - 1 {
                            p[axes[j]] = t[0] - b[j] * t[j + 1];
                        }
                        p[axes[n - 1]] = t.iter().sum();
                    }
                    cont(c)
                };
                let free: Vec<usize> = (1..n).collect();
                let over_rest = |c: &QuadratureConfig| lift(nest_axes(&local, &free, &image, c, ok), ok);
                let r = base.integrate_into(&local, &[0], &over_rest, cfg, ok)?;
                Ok(r.scaled(*scale))
            }
            Measure::Padded { dim, inner_axes, inner } => {
                let mapped: Vec<usize> = inner_axes.iter().map(|&i| axes[i]).collect();
                let rest: Vec<usize> = (0..*dim).filter(|i| !inner_axes.contains(i)).map(|i| axes[i]).collect();
                if rest.is_empty() {
                    return inner.integrate_into(point, &mapped, cont, cfg, ok);
                }
                let lebesgue = |c: &QuadratureConfig| lift(nest_axes(point, &rest, cont, c, ok), ok);
                inner.integrate_into(point, &mapped, &lebesgue, cfg, ok)
            }
        }
    }
}

fn product_into(
    factors: &[(&Measure, &[usize])],
    point: &RefCell<Vec<f64>>,
    cont: &dyn Fn(&QuadratureConfig) -> Partial,
    cfg: &QuadratureConfig,
    ok: &Cell<bool>,
) -> Result<QuadratureResult, QuadratureError> {
    match factors.split_first() {
        None => settle(cont(cfg)),
        Some(((m, axes), [])) => m.integrate_into(point, axes, cont, cfg, ok),
        Some(((m, axes), rest)) => {
            let inner = |c: &QuadratureConfig| lift(product_into(rest, point, cont, c, ok), ok);
            m.integrate_into(point, axes, &inner, cfg, ok)
        }
    }
}
