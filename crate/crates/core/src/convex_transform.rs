//! From one-variable data `(a, b, μ)` and convex weights `k` to the data of
//! `z ↦ q(k₁z₁ + … + k_nz_n)` on ℂ^{+n}.
//!
//! With all weights positive the new measure is the ladder pushforward of
//! `μ`, parametrised by `b_j = k_n/k_j` and normalised by `β_n = det M_n`.
//! Zero weights contribute Lebesgue factors on their axes.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::measures::{Measure, MeasureError};
use crate::representation::{RepresentationData, RepresentationError};

/// Weights below this are treated as exact zeros.
pub const ZERO_WEIGHT: f64 = 1e-15;
/// Allowed deviation of `Σ k` from one.
pub const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConvexError {
    #[error("convex weights must be finite and non-negative, got {0}")]
    BadWeight(f64),
    #[error("convex weights must sum to 1 (within 1e-12), sum is {0}")]
    BadSum(f64),
    #[error("at least one convex weight must be positive")]
    AllZero,
    #[error("weight k_{index} is zero; use transform_general for weights with zeros")]
    ZeroWeight { index: usize },
    #[error("ladder coefficients must be finite and positive, got {0}")]
    BadLadder(f64),
    #[error("at least {min} coefficients required, got {found}")]
    TooFew { min: usize, found: usize },
    #[error("expected one-variable data, got {0} variables")]
    NotOneVariable(usize),
    #[error(transparent)]
    Measure(#[from] MeasureError),
    #[error(transparent)]
    Representation(#[from] RepresentationError),
}

/// Convex weights `k`, all `≥ 0` with `Σ k = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexCoefficients(Vec<f64>);

impl ConvexCoefficients {
    pub fn new(k: Vec<f64>) -> Result<Self, ConvexError> {
        if k.is_empty() {
            return Err(ConvexError::TooFew { min: 1, found: 0 });
        }
        let mut k = k;
        for x in k.iter_mut() {
            if !(x.is_finite() && *x >= 0.0) {
                return Err(ConvexError::BadWeight(*x));
            }
            if *x < ZERO_WEIGHT {
                *x = 0.0;
            }
        }
        let sum: f64 = k.iter().sum();
        if sum == 0.0 {
            return Err(ConvexError::AllZero);
        }
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(ConvexError::BadSum(sum));
        }
        Ok(Self(k))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// All weights positive.
    pub fn is_strict(&self) -> bool {
        self.0.iter().all(|&x| x > 0.0)
    }

    /// Indices of the positive weights.
    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] > 0.0).collect()
    }
}

/// Positive ladder coefficients `b₁, …, b_{n−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderCoefficients(Vec<f64>);

impl LadderCoefficients {
    pub fn new(b: Vec<f64>) -> Result<Self, ConvexError> {
        if b.is_empty() {
            return Err(ConvexError::TooFew { min: 1, found: 0 });
        }
        if let Some(&bad) = b.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(ConvexError::BadLadder(bad));
        }
        Ok(Self(b))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `b_j = k_n / k_j`.
pub fn k_to_b(k: &ConvexCoefficients) -> Result<LadderCoefficients, ConvexError> {
    let k = k.values();
    if k.len() < 2 {
        return Err(ConvexError::TooFew { min: 2, found: k.len() });
    }
    if let Some(index) = k.iter().position(|&x| x == 0.0) {
        return Err(ConvexError::ZeroWeight { index: index + 1 });
    }
    let last = k[k.len() - 1];
    LadderCoefficients::new(k[..k.len() - 1].iter().map(|&kj| last / kj).collect())
}

/// Inverse of [`k_to_b`]: `k_ℓ = (1/b_ℓ)/F`, `k_n = 1/F` with `F = 1 + Σ 1/b_j`.
pub fn b_to_k(b: &LadderCoefficients) -> ConvexCoefficients {
    let inv: Vec<f64> = b.values().iter().map(|x| 1.0 / x).collect();
    let f = 1.0 + inv.iter().sum::<f64>();
    let mut k: Vec<f64> = inv.iter().map(|x| x / f).collect();
    k.push(1.0 / f);
    ConvexCoefficients(k)
}

/// `β_n = Σ_j Π_{i≠j} b_i + Π_i b_i`, the determinant of [`build_mn`].
pub fn beta_n(b: &LadderCoefficients) -> f64 {
    let b = b.values();
    let m = b.len();
    // prefix[j] = b_0 ⋯ b_{j−1}, suffix[j] = b_j ⋯ b_{m−1}
    let mut prefix = vec![1.0; m + 1];
    let mut suffix = vec![1.0; m + 1];
    for j in 0..m {
        prefix[j + 1] = prefix[j] * b[j];
        suffix[m - 1 - j] = suffix[m - j] * b[m - 1 - j];
    }
    let leave_one_out: f64 = (0..m).map(|j| prefix[j] * suffix[j + 1]).sum();
    leave_one_out + prefix[m]
}

/// Row `j < n` is `e₁ − b_j e_{j+1}`; the last row is all ones.
pub fn build_mn(b: &LadderCoefficients) -> DMatrix<f64> {
    let b = b.values();
    let n = b.len() + 1;
    let mut m = DMatrix::zeros(n, n);
    for (j, &bj) in b.iter().enumerate() {
        m[(j, 0)] = 1.0;
        m[(j, j + 1)] = -bj;
    }
    for c in 0..n {
        m[(n - 1, c)] = 1.0;
    }
    m
}

fn one_variable(data: &RepresentationData) -> Result<(), ConvexError> {
    if data.dim() != 1 {
        return Err(ConvexError::NotOneVariable(data.dim()));
    }
    Ok(())
}

fn scaled_linear(data: &RepresentationData, k: &[f64]) -> Vec<f64> {
    k.iter().map(|kl| kl * data.b()[0]).collect()
}

/// Data `(a, (k₁b, …, k_nb), μ̃)` for strictly positive `k`, `n ≥ 2`.
pub fn transform(data: &RepresentationData, k: &ConvexCoefficients) -> Result<RepresentationData, ConvexError> {
    one_variable(data)?;
    let b = k_to_b(k)?;
    let n = k.len();
    let measure = if data.mu().is_zero() {
        Measure::zero(n)
    } else {
        let beta = beta_n(&b);
        Measure::pushforward_ladder(data.mu().clone(), b, beta)?
    };
    Ok(RepresentationData::new(data.a(), scaled_linear(data, k.values()), measure)?)
}

/// As [`transform`] but allowing zero weights. Axes with `k_ℓ = 0` carry
/// Lebesgue measure and are integrated innermost.
pub fn transform_general(data: &RepresentationData, k: &ConvexCoefficients) -> Result<RepresentationData, ConvexError> {
    one_variable(data)?;
    let n = k.len();
    let support = k.support();
    let linear = scaled_linear(data, k.values());
    if support.len() == n {
        return transform(data, k);
    }
    let measure = if support.len() == 1 {
        let factors = (0..n)
            .map(|i| {
                if i == support[0] {
                    data.mu().clone()
                } else {
                    Measure::lebesgue(1)
                }
            })
            .collect();
        Measure::product(factors)?
    } else {
        let sub = ConvexCoefficients::new(support.iter().map(|&i| k.values()[i]).collect())?;
        let reduced = transform(data, &sub)?;
        Measure::padded(n, support, reduced.mu().clone())?
    };
    Ok(RepresentationData::new(data.a(), linear, measure)?)
}
