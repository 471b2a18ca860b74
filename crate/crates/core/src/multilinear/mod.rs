//! Small-dimension linear and exterior algebra: 3×3 matrices, wedge
//! products and the Hodge star on R³, stratified 2-vectors on R⁶, the
//! quadratic form `Q`, and the cofactor identity battery.

mod exterior;
mod identities;
mod matrix;
mod vector;

use thiserror::Error;

pub use exterior::{
    hodge_star, hodge_unstar, lambda2_r6_pairs, levi_civita, wedge3, wedge6, Bivector3, TwoVector6,
    Vec6, LAMBDA2_R6_DIM,
};
pub use identities::{
    complement_projector, det_cayley_hamilton, matrix_identity_residuals, project_off, NamedResidual,
};
pub use matrix::Mat3;
pub use vector::Vec3;

/// Tolerance on `|y| − 1` for inputs documented as unit vectors.
pub const UNIT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MultilinearError {
    #[error("direction must be a unit vector (|y| = {norm})")]
    NotUnit { norm: f64 },
}

/// `|lhs − rhs| / max(1, |lhs|, |rhs|)`.
#[inline]
pub fn relative_residual(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / 1f64.max(lhs.abs()).max(rhs.abs())
}

/// `Q(A) = (tr A)²/4 − (tr cof A)/6`.
pub fn quadratic_form_q(a: &Mat3) -> f64 {
    let t = a.trace();
    0.25 * t * t - a.trace_cofactor() / 6.0
}

/// `Q` written through the two nontrivial eigenvalues of a matrix with a
/// one-dimensional kernel: `(λ₁+λ₂)²/6 + (λ₁²+λ₂²)/12`.
pub fn quadratic_form_q_eigen(lambda1: f64, lambda2: f64) -> f64 {
    let s = lambda1 + lambda2;
    s * s / 6.0 + (lambda1 * lambda1 + lambda2 * lambda2) / 12.0
}

/// Eigen-decomposition of a symmetric 2×2 matrix `[[a, b], [b, c]]`.
///
/// Returns `(λ_max, λ_min, (cos φ, sin φ))` where `(cos φ, sin φ)` is the unit
/// eigenvector of `λ_max` and `(−sin φ, cos φ)` that of `λ_min`.
pub fn sym2_eigen(a: f64, b: f64, c: f64) -> (f64, f64, (f64, f64)) {
    let phi = 0.5 * (2.0 * b).atan2(a - c);
    let (s, co) = phi.sin_cos();
    let l_max = a * co * co + 2.0 * b * co * s + c * s * s;
    let l_min = a * s * s - 2.0 * b * co * s + c * co * co;
    (l_max, l_min, (co, s))
}
