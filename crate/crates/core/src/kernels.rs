//! Integration kernels of the representation formulas.
//!
//! `K_n` comes in two algebraically equivalent forms: a difference of
//! products and a single fraction. The single fraction is the default since
//! it needs only one division. The ladder kernels `K̃_m^d` are what remains of
//! `K_n(z, M_n t)` after integrating out the trailing `d` variables.

use num_complex::Complex64;
use thiserror::Error;

use crate::convex_transform::{build_mn, LadderCoefficients};
use crate::point::{DomainError, PolyUpperPoint};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("kernel parameters invalid: {0}")]
    InvalidParams(String),
}

const I: Complex64 = Complex64::new(0.0, 1.0);

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// `i^k` without rounding error.
fn i_pow(k: usize) -> Complex64 {
    match k % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn warn_if_close(z: &[Complex64], t: &[f64]) {
    for (j, (zj, &tj)) in z.iter().zip(t).enumerate() {
        let gap = (tj - zj).norm();
        if gap < 1e-12 {
            log::warn!("kernel evaluated with |t_{j} - z_{j}| = {gap:e}; result is ill-conditioned");
        }
    }
}

/// `(1 + t z) / ((1 + t²)(t − z))` with no domain check. Equal to
/// `1/(t − z) − t/(1 + t²)` but without the cancellation for large `t`.
#[inline]
pub(crate) fn k1_unchecked(z: Complex64, t: f64) -> Complex64 {
    (1.0 + z * t) / ((1.0 + t * t) * (t - z))
}

/// One-variable kernel `K_1(z, t) = 1/(t − z) − t/(1 + t²)`.
pub fn eval_k1(z: Complex64, t: f64) -> Result<Complex64, KernelError> {
    PolyUpperPoint::single(z)?;
    warn_if_close(&[z], &[t]);
    Ok(k1_unchecked(z, t))
}

fn check_lengths(z: &PolyUpperPoint, t: &[f64]) -> Result<(), KernelError> {
    if t.len() != z.dim() {
        return Err(DomainError::DimensionMismatch {
            expected: z.dim(),
            found: t.len(),
        }
        .into());
    }
    Ok(())
}

/// `K_n` as a difference of two products.
pub fn eval_kn_sum(z: &PolyUpperPoint, t: &[f64]) -> Result<Complex64, KernelError> {
    check_lengths(z, t)?;
    warn_if_close(z.coords(), t);
    Ok(kn_sum_unchecked(z.coords(), t))
}

pub(crate) fn kn_sum_unchecked(z: &[Complex64], t: &[f64]) -> Complex64 {
    let n = z.len() as i32;
    let scale = (2.0 * I).powi(-n);
    let mut first = one();
    let mut second = one();
    for (&zj, &tj) in z.iter().zip(t) {
        let lower = 1.0 / (tj + I);
        first *= 1.0 / (tj - zj) - lower;
        second *= 1.0 / (tj - I) - lower;
    }
    I * (2.0 * scale * first - scale * second)
}

/// `K_n` as a single fraction; the default form.
pub fn eval_kn_rational(z: &PolyUpperPoint, t: &[f64]) -> Result<Complex64, KernelError> {
    check_lengths(z, t)?;
    warn_if_close(z.coords(), t);
    Ok(kn_rational_unchecked(z.coords(), t))
}

pub(crate) fn kn_rational_unchecked(z: &[Complex64], t: &[f64]) -> Complex64 {
    let n = z.len();
    let pow2 = 2f64.powi(n as i32 - 1);
    let mut mixed = one();
    let mut gaps = one();
    let mut den = one();
    for (&zj, &tj) in z.iter().zip(t) {
        let gap = tj - zj;
        mixed *= (tj - I) * (zj + I);
        gaps *= gap;
        den *= gap * (tj * tj + 1.0);
    }
    (i_pow(3 * n + 1) * mixed - pow2 * I * gaps) / (pow2 * den)
}

/// `K̃_n^0(z, t) = K_n(z, M_n t)`.
pub fn eval_ktilde0(z: &PolyUpperPoint, t: &[f64], b: &LadderCoefficients) -> Result<Complex64, KernelError> {
    check_lengths(z, t)?;
    if b.len() + 1 != z.dim() {
        return Err(KernelError::InvalidParams(format!(
            "{} ladder coefficients given for dimension {}",
            b.len(),
            z.dim()
        )));
    }
    let m = build_mn(b);
    let image: Vec<f64> = (0..z.dim())
        .map(|r| (0..z.dim()).map(|c| m[(r, c)] * t[c]).sum())
        .collect();
    warn_if_close(z.coords(), &image);
    Ok(kn_rational_unchecked(z.coords(), &image))
}

/// The rung `(m, d)` of the ladder: `m` variables remain, `d` were integrated.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderKernelParams {
    m: usize,
    d: usize,
    b: Vec<f64>,
}

impl LadderKernelParams {
    pub fn new(m: usize, d: usize, b: &LadderCoefficients) -> Result<Self, KernelError> {
        if m < 1 {
            return Err(KernelError::InvalidParams("m must be at least 1".into()));
        }
        let n = m + d;
        if n < 2 {
            return Err(KernelError::InvalidParams("m + d must be at least 2".into()));
        }
        if b.len() != n - 1 {
            return Err(KernelError::InvalidParams(format!(
                "expected {} ladder coefficients for m + d = {n}, got {}",
                n - 1,
                b.len()
            )));
        }
        Ok(Self {
            m,
            d,
            b: b.values().to_vec(),
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.m + self.d
    }

    /// `b_j`, 1-based as in the ladder formulas.
    fn b(&self, j: usize) -> f64 {
        self.b[j - 1]
    }

    /// `F = 1 + Σ 1/b_j` over the integrated indices `j = m, …, n − 1`.
    pub fn f_const(&self) -> f64 {
        1.0 + (self.m..self.n()).map(|j| 1.0 / self.b(j)).sum::<f64>()
    }

    /// `F t₁ + t₂ + … + t_m`.
    pub fn t_sum(&self, t: &[f64]) -> f64 {
        self.f_const() * t[0] + t[1..].iter().sum::<f64>()
    }

    /// `z_m/b_m + … + z_{n−1}/b_{n−1} + z_n`.
    pub fn z_sum(&self, z: &[Complex64]) -> Complex64 {
        let n = self.n();
        (self.m..n).map(|j| z[j - 1] / self.b(j)).sum::<Complex64>() + z[n - 1]
    }
}

/// General ladder kernel `K̃_m^d(z, t)` with `z ∈ ℂ^{+(m+d)}` and `t ∈ ℝ^m`.
pub fn eval_ktilde_md(
    z: &PolyUpperPoint,
    t: &[f64],
    params: &LadderKernelParams,
) -> Result<Complex64, KernelError> {
    z.check_dim(params.n())?;
    if t.len() != params.m {
        return Err(DomainError::DimensionMismatch {
            expected: params.m,
            found: t.len(),
        }
        .into());
    }
    Ok(ktilde_md_unchecked(z.coords(), t, params))
}

pub(crate) fn ktilde_md_unchecked(z: &[Complex64], t: &[f64], p: &LadderKernelParams) -> Complex64 {
    let m = p.m;
    let f = p.f_const();
    let big_t = p.t_sum(t);
    let big_z = p.z_sum(z);
    let mut a = one();
    let mut c = one();
    let mut d = one();
    for j in 2..=m {
        let s = t[0] - p.b(j - 1) * t[j - 1];
        a *= s - I;
        c *= s - z[j - 2];
        d *= s + I;
    }
    let b_prod: Complex64 = z[..m - 1].iter().map(|&zj| zj + I).product();
    let pow2 = 2f64.powi(m as i32 - 1);
    let fi = I * f;
    let num = i_pow(3 * m + 1) * a * (big_t - fi) * b_prod * (big_z + fi) - pow2 * fi * c * (big_t - big_z);
    let den = pow2 * a * c * d * (big_t - fi) * (big_t - big_z) * (big_t + fi);
    num / den
}
