//! Numerical verification of the kernel ladder: integrating `K̃_m^d` over its
//! last variable gives `(π/b_{m−1}) K̃_{m−1}^{d+1}`, the last rung collapses to
//! `K_1` at the convex combination `Σ k_ℓ z_ℓ`, and the representation of a
//! transformed function agrees with `q(Σ k_ℓ z_ℓ)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::convex_transform::{b_to_k, beta_n, transform_general, ConvexCoefficients, ConvexError, LadderCoefficients};
use crate::kernels::{k1_unchecked, ktilde_md_unchecked, KernelError, LadderKernelParams};
use crate::point::{DomainError, PolyUpperPoint};
use crate::quadrature::{integrate_iterated, integrate_line, QuadratureConfig, QuadratureError, QuadratureResult};
use crate::representation::{eval_reduced, eval_with, EvalMethod, RepresentationData, RepresentationError};
use crate::residue_oracle::{line_integral, ComplexPolynomial, RationalFunction, ResidueError};
use crate::sampling;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LadderError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error("quadrature did not converge (estimate {value}, error {error_estimate:e})")]
    NotConverged { value: Complex64, error_estimate: f64 },
    #[error("integral diverged")]
    Diverged,
    #[error(transparent)]
    Residue(#[from] ResidueError),
    #[error(transparent)]
    Convex(#[from] ConvexError),
    #[error(transparent)]
    Representation(#[from] RepresentationError),
    #[error("invalid ladder parameters: {0}")]
    Invalid(String),
}

fn accept(r: QuadratureResult) -> Result<Complex64, LadderError> {
    if r.diverged {
        return Err(LadderError::Diverged);
    }
    if !r.converged {
        return Err(LadderError::NotConverged {
            value: r.value,
            error_estimate: r.error_estimate,
        });
    }
    Ok(r.value)
}

/// `|lhs − rhs| / |rhs|`, or `|lhs|` when `rhs = 0`.
pub fn relative_error(lhs: Complex64, rhs: Complex64) -> f64 {
    let gap = (lhs - rhs).norm();
    if rhs.norm() > 0.0 {
        gap / rhs.norm()
    } else {
        gap
    }
}

/// Two sides of an identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
}

impl IdentityCheck {
    pub fn rel_error(&self) -> f64 {
        relative_error(self.lhs, self.rhs)
    }
}

fn rung_params(m: usize, d: usize, b: &LadderCoefficients, z: &PolyUpperPoint, t_len: usize) -> Result<LadderKernelParams, LadderError> {
    let params = LadderKernelParams::new(m, d, b)?;
    z.check_dim(m + d)?;
    if t_len != m - 1 {
        return Err(DomainError::DimensionMismatch {
            expected: m - 1,
            found: t_len,
        }
        .into());
    }
    Ok(params)
}

/// `∫ K̃_m^d(z, (t, s)) ds` by quadrature, for `m ≥ 2`.
fn integrate_last(params: &LadderKernelParams, z: &PolyUpperPoint, t: &[f64], cfg: &QuadratureConfig) -> Result<Complex64, LadderError> {
    let zc = z.coords();
    let mut full = t.to_vec();
    full.push(0.0);
    let r = integrate_line(
        |s| {
            let mut tt = full.clone();
            *tt.last_mut().expect("nonempty") = s;
            ktilde_md_unchecked(zc, &tt, params)
        },
        cfg,
    )?;
    accept(r)
}

/// `∫ K̃_m^d(z, (t, t_m)) dt_m` against `(π/b_{m−1}) K̃_{m−1}^{d+1}(z, t)`, with
/// `t ∈ ℝ^{m−1}` and `m ≥ 3`.
pub fn verify_step(
    m: usize,
    d: usize,
    b: &LadderCoefficients,
    z: &PolyUpperPoint,
    t: &[f64],
    cfg: &QuadratureConfig,
) -> Result<IdentityCheck, LadderError> {
    if m < 3 {
        return Err(LadderError::Invalid(format!("a ladder step needs m ≥ 3, got {m}; use verify_final_step")));
    }
    let params = rung_params(m, d, b, z, t.len())?;
    let lower = LadderKernelParams::new(m - 1, d + 1, b)?;
    let lhs = integrate_last(&params, z, t, cfg)?;
    let rhs = PI / b.values()[m - 2] * ktilde_md_unchecked(z.coords(), t, &lower);
    Ok(IdentityCheck { lhs, rhs })
}

/// `t_m ↦ K̃_m^d(z, (t, t_m))` as a rational function, for `m ≥ 2`.
pub fn ladder_slice(m: usize, d: usize, b: &LadderCoefficients, z: &PolyUpperPoint, t: &[f64]) -> Result<RationalFunction, LadderError> {
    let params = rung_params(m, d, b, z, t.len())?;
    let bv = b.values();
    let zc = z.coords();
    let i = Complex64::i();
    let c = |v: Complex64| ComplexPolynomial::constant(v);
    let one = c(Complex64::new(1.0, 0.0));
    let f = params.f_const();
    let fi = i * f;
    // the final variable τ enters linearly through s_m and T
    let mut big_t = ComplexPolynomial::linear(Complex64::new(f * t[0], 0.0), Complex64::new(1.0, 0.0));
    for &tj in &t[1..] {
        big_t = big_t + c(Complex64::new(tj, 0.0));
    }
    let big_z = params.z_sum(zc);
    let (mut a, mut cc, mut dd) = (one.clone(), one.clone(), one.clone());
    for j in 2..=m {
        let s = if j < m {
            c(Complex64::new(t[0] - bv[j - 2] * t[j - 1], 0.0))
        } else {
            ComplexPolynomial::linear(Complex64::new(t[0], 0.0), Complex64::new(-bv[j - 2], 0.0))
        };
        a = &a * &(s.clone() - c(i));
        cc = &cc * &(s.clone() - c(zc[j - 2]));
        dd = &dd * &(s + c(i));
    }
    let b_prod: Complex64 = zc[..m - 1].iter().map(|&zj| zj + i).product();
    let pow2 = 2f64.powi(m as i32 - 1);
    let i_pow = i.powu((3 * m + 1) as u32);
    let t_minus_fi = big_t.clone() - c(fi);
    let t_minus_z = big_t.clone() - c(big_z);
    let num = (&a * &t_minus_fi).scale(i_pow * b_prod * (big_z + fi)) - (&cc * &t_minus_z).scale(pow2 * fi);
    let den = (&(&(&a * &cc) * &dd) * &(&t_minus_fi * &t_minus_z) * (big_t + c(fi))).scale(Complex64::new(pow2, 0.0));
    Ok(RationalFunction::new(num, den)?)
}

/// `∫ K̃_m^d(z, (t, t_m)) dt_m` by residues, for `m ≥ 2`.
pub fn integrate_last_by_residues(
    m: usize,
    d: usize,
    b: &LadderCoefficients,
    z: &PolyUpperPoint,
    t: &[f64],
) -> Result<Complex64, LadderError> {
    Ok(line_integral(&ladder_slice(m, d, b, z, t)?)?.value)
}

/// `∫ K̃_2^{n−2}(z, (t₁, t₂)) dt₂` against
/// `π (b₂⋯b_{n−1} / β_n) K_1(k₁z₁ + … + k_nz_n, t₁)`.
pub fn verify_final_step(
    b: &LadderCoefficients,
    z: &PolyUpperPoint,
    t1: f64,
    cfg: &QuadratureConfig,
) -> Result<IdentityCheck, LadderError> {
    let n = b.len() + 1;
    let params = rung_params(2, n - 2, b, z, 1)?;
    let lhs = integrate_last(&params, z, &[t1], cfg)?;
    let tail: f64 = b.values()[1..].iter().product();
    let rhs = PI * tail / beta_n(b) * k1_unchecked(convex_point(b, z)?, t1);
    Ok(IdentityCheck { lhs, rhs })
}

/// `Σ k_ℓ z_ℓ` with `k` recovered from `b`.
fn convex_point(b: &LadderCoefficients, z: &PolyUpperPoint) -> Result<Complex64, LadderError> {
    z.check_dim(b.len() + 1)?;
    Ok(z.weighted_sum(b_to_k(b).values()))
}

/// The point reached at the bottom of the ladder, `Z/F` for the rung
/// `(1, n − 1)`, next to `Σ k_ℓ z_ℓ`. The two coincide.
pub fn convex_point_identity(b: &LadderCoefficients, z: &PolyUpperPoint) -> Result<IdentityCheck, LadderError> {
    let n = b.len() + 1;
    let params = LadderKernelParams::new(1, n - 1, b)?;
    z.check_dim(n)?;
    Ok(IdentityCheck {
        lhs: params.z_sum(z.coords()) / params.f_const(),
        rhs: convex_point(b, z)?,
    })
}

/// Product of the factors picked up on the way down the ladder:
/// `π/b_{n−1}, …, π/b₂` and finally `π b₂⋯b_{n−1} / β_n`.
pub fn rung_factor_product(b: &LadderCoefficients) -> f64 {
    let bv = b.values();
    let steps: f64 = bv[1..].iter().map(|bj| PI / bj).product();
    let tail: f64 = bv[1..].iter().product();
    steps * PI * tail / beta_n(b)
}

/// How the `(n − 1)`-fold integral of `K̃_n^0` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ReductionPath {
    /// Literal iterated quadrature over `t₂, …, t_n`. Practical for `n ≤ 3`.
    Iterated,
    /// Only the final rung is integrated; the rung factors above it are
    /// applied and each rung is checked on its own at `t = (t₁, 0, …, 0)`.
    RungByRung,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReductionCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
    /// Largest relative error of the individual rung checks.
    pub rung_max_rel_error: Option<f64>,
}

impl ReductionCheck {
    pub fn rel_error(&self) -> f64 {
        relative_error(self.lhs, self.rhs)
    }
}

/// `∫_{ℝ^{n−1}} K̃_n^0(z, t) dt_n⋯dt₂` against `(π^{n−1}/β_n) K_1(Σ k_ℓ z_ℓ, t₁)`.
pub fn verify_full_reduction(
    b: &LadderCoefficients,
    z: &PolyUpperPoint,
    t1: f64,
    path: ReductionPath,
    cfg: &QuadratureConfig,
) -> Result<ReductionCheck, LadderError> {
    let n = b.len() + 1;
    let params = LadderKernelParams::new(n, 0, b)?;
    z.check_dim(n)?;
    let rhs = PI.powi(n as i32 - 1) / beta_n(b) * k1_unchecked(convex_point(b, z)?, t1);
    let zc = z.coords();
    match path {
        ReductionPath::Iterated => {
            // t_n innermost, t₂ outermost
            let order: Vec<usize> = (0..n - 1).rev().collect();
            let r = integrate_iterated(
                |s| {
                    let mut t = Vec::with_capacity(n);
                    t.push(t1);
                    t.extend_from_slice(s);
                    ktilde_md_unchecked(zc, &t, &params)
                },
                &order,
                cfg,
            )?;
            Ok(ReductionCheck {
                lhs: accept(r)?,
                rhs,
                rung_max_rel_error: None,
            })
        }
        ReductionPath::RungByRung => {
            let mut worst: f64 = 0.0;
            let mut factor = 1.0;
            for m in (3..=n).rev() {
                let mut t = vec![0.0; m - 1];
                t[0] = t1;
                worst = worst.max(verify_step(m, n - m, b, z, &t, cfg)?.rel_error());
                factor *= PI / b.values()[m - 2];
            }
            let last = LadderKernelParams::new(2, n - 2, b)?;
            let lhs = factor * integrate_last(&last, z, &[t1], cfg)?;
            Ok(ReductionCheck {
                lhs,
                rhs,
                rung_max_rel_error: Some(worst),
            })
        }
    }
}

/// One random draw of ladder parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderDraw {
    pub b: Vec<f64>,
    pub z: Vec<Complex64>,
    pub t: Vec<f64>,
}

/// Draw `index` of stream `seed`: `b_j` log-uniform in `[½, 2]`, `Re z ∈ [−2, 2]`,
/// `Im z ∈ [0.3, 2]`, `t ∈ [−2, 2]^{t_len}`.
pub fn draw_ladder(seed: u64, index: usize, n: usize, t_len: usize) -> LadderDraw {
    let mut rng = sampling::sample_rng(seed, index);
    let b = (0..n - 1).map(|_| sampling::log_uniform(&mut rng, 0.5, 2.0)).collect();
    let z = sampling::poly_upper_point(&mut rng, n, (-2.0, 2.0), (0.3, 2.0)).into_inner();
    let t = (0..t_len).map(|_| rng.gen_range(-2.0..=2.0)).collect();
    LadderDraw { b, z, t }
}

/// Per-sample record of a rung check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RungSample {
    pub draw: LadderDraw,
    pub check: IdentityCheck,
    /// The same integral by residues.
    pub residue: Complex64,
}

impl RungSample {
    /// Gap between the quadrature and residue values of the integral.
    pub fn residue_rel_error(&self) -> f64 {
        relative_error(self.check.lhs, self.residue)
    }
}

/// Checks rung `(m, d)` on one random draw; `m = 2` is the final step.
pub fn rung_sample(m: usize, d: usize, seed: u64, index: usize, cfg: &QuadratureConfig) -> Result<RungSample, LadderError> {
    if m < 2 {
        return Err(LadderError::Invalid(format!("rungs start at m = 2, got {m}")));
    }
    let n = m + d;
    let draw = draw_ladder(seed, index, n, m - 1);
    let b = LadderCoefficients::new(draw.b.clone())?;
    let z = PolyUpperPoint::new(draw.z.clone())?;
    let check = if m == 2 {
        verify_final_step(&b, &z, draw.t[0], cfg)?
    } else {
        verify_step(m, d, &b, &z, &draw.t, cfg)?
    };
    let residue = integrate_last_by_residues(m, d, &b, &z, &draw.t)?;
    Ok(RungSample { draw, check, residue })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderReport {
    pub m: usize,
    pub d: usize,
    pub sample_count: usize,
    pub max_rel_error: f64,
    /// Largest gap between the quadrature and residue paths.
    pub max_residue_rel_error: f64,
    pub samples: Vec<(Complex64, Complex64)>,
}

impl LadderReport {
    pub fn from_samples(m: usize, d: usize, samples: &[RungSample]) -> Self {
        Self {
            m,
            d,
            sample_count: samples.len(),
            max_rel_error: samples.iter().map(|s| s.check.rel_error()).fold(0.0, f64::max),
            max_residue_rel_error: samples.iter().map(RungSample::residue_rel_error).fold(0.0, f64::max),
            samples: samples.iter().map(|s| (s.check.lhs, s.check.rhs)).collect(),
        }
    }
}

/// Checks rung `(m, d)` on draws `0..samples` of stream `seed`.
pub fn verify_rung(m: usize, d: usize, samples: usize, seed: u64, cfg: &QuadratureConfig) -> Result<LadderReport, LadderError> {
    let rows = (0..samples)
        .map(|i| rung_sample(m, d, seed, i, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LadderReport::from_samples(m, d, &rows))
}

/// Pointwise comparison of the transformed representation with `q(Σ k_ℓ z_ℓ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MainSample {
    pub expected: Complex64,
    pub closed_form: Complex64,
    pub quadrature: Option<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MainTheoremReport {
    pub samples: Vec<MainSample>,
    /// `max |closed form − expected| / max(1, |expected|)`.
    pub closed_form_max_dev: f64,
    pub quadrature_max_dev: Option<f64>,
}

/// `|value − expected| / max(1, |expected|)`.
pub fn deviation(value: Complex64, expected: Complex64) -> f64 {
    (value - expected).norm() / expected.norm().max(1.0)
}

/// Compares `eval(transform(data, k), z)` with `q(Σ k_ℓ z_ℓ)` at every `z`.
/// Weights with zero entries go through the general transform. The quadrature
/// path is skipped unless `with_quadrature` is set.
pub fn verify_main_theorem(
    data: &RepresentationData,
    k: &ConvexCoefficients,
    points: &[PolyUpperPoint],
    with_quadrature: bool,
    cfg: &QuadratureConfig,
) -> Result<MainTheoremReport, LadderError> {
    let transformed = transform_general(data, k)?;
    let mut samples = Vec::with_capacity(points.len());
    for z in points {
        let w = z.weighted_sum(k.values());
        let expected = eval_reduced(data, &PolyUpperPoint::single(w)?, cfg)?.value;
        let closed_form = eval_reduced(&transformed, z, cfg)?.value;
        let quadrature = if with_quadrature {
            Some(eval_with(&transformed, z, cfg, EvalMethod::Quadrature)?.value)
        } else {
            None
        };
        samples.push(MainSample {
            expected,
            closed_form,
            quadrature,
        });
    }
    let closed_form_max_dev = samples.iter().map(|s| deviation(s.closed_form, s.expected)).fold(0.0, f64::max);
    let quadrature_max_dev = with_quadrature.then(|| {
        samples
            .iter()
            .filter_map(|s| s.quadrature.map(|q| deviation(q, s.expected)))
            .fold(0.0, f64::max)
    });
    Ok(MainTheoremReport {
        samples,
        closed_form_max_dev,
        quadrature_max_dev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Measure;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn lc(b: &[f64]) -> LadderCoefficients {
        LadderCoefficients::new(b.to_vec()).unwrap()
    }

    fn ii(n: usize) -> PolyUpperPoint {
        PolyUpperPoint::repeated(Complex64::i(), n).unwrap()
    }

    #[test]
    fn first_step_at_the_origin() {
        let r = verify_step(3, 0, &lc(&[1.0, 1.0]), &ii(3), &[0.0, 0.0], &cfg()).unwrap();
        assert!((r.lhs - r.rhs).norm() <= 1e-8, "{r:?}");
    }

    #[test]
    fn final_step_halfway() {
        let r = verify_final_step(&lc(&[1.0]), &ii(2), 0.0, &cfg()).unwrap();
        assert!((r.rhs - Complex64::new(0.0, PI / 2.0)).norm() < 1e-15);
        assert!(r.rel_error() <= 1e-8);
        let r = verify_final_step(&lc(&[0.5, 1.0]), &ii(3), 0.0, &cfg()).unwrap();
        assert!((r.rhs - Complex64::new(0.0, PI / 2.0)).norm() < 1e-15);
        assert!(r.rel_error() <= 1e-8);
    }

    #[test]
    fn residues_match_quadrature() {
        let z = PolyUpperPoint::new(vec![Complex64::new(0.3, 0.7), Complex64::new(-1.0, 1.5), Complex64::new(0.5, 0.4)]).unwrap();
        let b = lc(&[0.7, 1.6]);
        for (m, d, t) in [(3, 0, vec![0.4, -1.1]), (2, 1, vec![0.8])] {
            let quad = if m == 2 {
                verify_final_step(&b, &z, t[0], &cfg()).unwrap().lhs
            } else {
                verify_step(m, d, &b, &z, &t, &cfg()).unwrap().lhs
            };
            let res = integrate_last_by_residues(m, d, &b, &z, &t).unwrap();
            assert!(relative_error(quad, res) < 1e-9, "{m} {quad} {res}");
        }
    }

    #[test]
    fn telescoping() {
        for b in [vec![1.0], vec![0.5, 2.0], vec![1.3, 0.7, 1.9, 0.6]] {
            let b = lc(&b);
            let n = b.len() + 1;
            let expect = PI.powi(n as i32 - 1) / beta_n(&b);
            assert!((rung_factor_product(&b) - expect).abs() <= 1e-13 * expect);
        }
    }

    #[test]
    fn bottom_point_is_the_convex_combination() {
        let z = PolyUpperPoint::new(vec![Complex64::new(1.0, 1.0), Complex64::new(-2.0, 0.5), Complex64::new(0.0, 3.0)]).unwrap();
        let r = convex_point_identity(&lc(&[0.8, 1.7]), &z).unwrap();
        assert!(r.rel_error() < 1e-14);
    }

    #[test]
    fn reduction_paths() {
        let r = verify_full_reduction(&lc(&[1.0]), &ii(2), 0.0, ReductionPath::Iterated, &cfg()).unwrap();
        assert!(r.rel_error() < 1e-8);
        let z = PolyUpperPoint::new(vec![Complex64::new(0.0, 1.0), Complex64::new(0.0, 2.0), Complex64::new(0.0, 3.0)]).unwrap();
        let r = verify_full_reduction(&lc(&[1.0, 1.0]), &z, 1.0, ReductionPath::RungByRung, &cfg()).unwrap();
        let expect = PI * PI / 3.0 * k1_unchecked(Complex64::new(0.0, 2.0), 1.0);
        assert!((r.rhs - expect).norm() < 1e-14);
        assert!(r.rel_error() < 1e-8 && r.rung_max_rel_error.unwrap() < 1e-8, "{r:?}");
    }

    #[test]
    fn main_theorem_halfway_example() {
        let data = RepresentationData::one_var(0.0, 0.0, Measure::dirac(vec![0.0], PI).unwrap()).unwrap();
        let k = ConvexCoefficients::new(vec![0.5, 0.5]).unwrap();
        let points = [ii(2), PolyUpperPoint::new(vec![Complex64::new(1.0, 0.5), Complex64::new(-0.3, 2.0)]).unwrap()];
        let r = verify_main_theorem(&data, &k, &points, true, &cfg()).unwrap();
        assert!((r.samples[0].expected - Complex64::i()).norm() < 1e-15);
        assert!(r.closed_form_max_dev <= 1e-12);
        assert!(r.quadrature_max_dev.unwrap() <= 1e-7, "{r:?}");
    }

    #[test]
    fn rung_parameters_are_checked() {
        assert!(verify_step(2, 1, &lc(&[1.0, 1.0]), &ii(3), &[0.0], &cfg()).is_err());
        assert!(verify_step(3, 0, &lc(&[1.0, 1.0]), &ii(3), &[0.0], &cfg()).is_err());
        assert!(verify_step(3, 0, &lc(&[1.0]), &ii(3), &[0.0, 0.0], &cfg()).is_err());
    }
}
