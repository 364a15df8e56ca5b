//! Integral representations of Herglotz-Nevanlinna functions on the
//! poly-upper half-plane, and the transform taking one-variable data for `q`
//! to several-variable data for `z ↦ q(k₁z₁ + … + k_nz_n)`.

// `!(x > 0.0)` style checks are there to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditions;
pub mod convex_transform;
pub mod kernels;
pub mod ladder_verify;
pub mod measures;
pub mod point;
pub mod quadrature;
pub mod representation;
pub mod residue_oracle;
pub mod sampling;

pub use num_complex::Complex64;
pub use point::{DomainError, PolyUpperPoint};
pub use quadrature::{QuadratureConfig, QuadratureError, QuadratureResult};
