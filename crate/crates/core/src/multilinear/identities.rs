//! Determinant and cofactor identities for 3×3 matrices paired with a unit vector.

use serde::Serialize;

use super::{relative_residual, Mat3, MultilinearError, Vec3, UNIT_TOLERANCE};

/// One identity evaluated by two independent routes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedResidual {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// `|lhs − rhs| / max(1, |lhs|, |rhs|)`.
    pub residual: f64,
}

impl NamedResidual {
    pub fn new(name: &'static str, lhs: f64, rhs: f64) -> Self {
        Self { name, lhs, rhs, residual: relative_residual(lhs, rhs) }
    }
}

/// `y · M y`.
fn quad(m: &Mat3, y: Vec3) -> f64 {
    y.dot(m.mul_vec(y))
}

/// Orthogonal projector onto `y⊥` for unit `y`.
pub fn complement_projector(y: Vec3) -> Mat3 {
    Mat3::IDENTITY - y.outer(y)
}

/// Compresses `a` so that `a y = aᵀ y = 0`.
pub fn project_off(a: &Mat3, y: Vec3) -> Mat3 {
    let p = complement_projector(y);
    p * *a * p
}

/// Determinant from traces of powers (Cayley–Hamilton).
pub fn det_cayley_hamilton(n: &Mat3) -> f64 {
    let n2 = *n * *n;
    let n3 = n2 * *n;
    let t1 = n.trace();
    (t1 * t1 * t1 - 3.0 * t1 * n2.trace() + 2.0 * n3.trace()) / 6.0
}

/// `Σ_k tr cof(M^k)` where `M^k_ij = build(i, j, k)`.
fn sum_trace_cof(build: impl Fn(usize, usize, usize) -> f64) -> f64 {
    (0..3)
        .map(|k| {
            let mut m = Mat3::ZERO;
            for i in 0..3 {
                for j in 0..3 {
                    m[(i, j)] = build(i, j, k);
                }
            }
            m.trace_cofactor()
        })
        .sum()
}

/// Evaluates the cofactor identities for `(a, y)`.
///
/// Entries, in order: `lemLA1` (`y·cof A y = tr cof(BA)`), `lemLA2`
/// (sum of cofactor traces of the rotated rank-two family), `lemLA3` and
/// `lemLA4` on the compression of `a` to `y⊥`, `rank_one_det`
/// (`det(A + yyᵀ) = det A + y·cof A y`) and `cayley_hamilton_det`.
pub fn matrix_identity_residuals(a: &Mat3, y: Vec3) -> Result<Vec<NamedResidual>, MultilinearError> {
    let norm = y.norm();
    if (norm - 1.0).abs() > UNIT_TOLERANCE {
        return Err(MultilinearError::NotUnit { norm });
    }
    let b = Mat3::levi_civita(y);
    let y_cof_y = quad(&a.cofactor(), y);

    let lem1 = (b * *a).trace_cofactor();
    let lem2 = sum_trace_cof(|i, j, k| {
        (0..3).map(|r| b[(i, r)] * (a[(r, j)] * y[k] + a[(r, k)] * y[j])).sum()
    });

    let ap = project_off(a, y);
    let yp_cof_yp = quad(&ap.cofactor(), y);
    let lem3 = ap.trace_cofactor();
    let lem4 = sum_trace_cof(|i, j, k| -ap[(i, j)] * y[k] - ap[(i, k)] * y[j]);

    let rank_one_lhs = (*a + y.outer(y)).det();
    let rank_one_rhs = a.det() + y_cof_y;

    Ok(vec![
        NamedResidual::new("lemLA1", y_cof_y, lem1),
        NamedResidual::new("lemLA2", y_cof_y, lem2),
        NamedResidual::new("lemLA3", yp_cof_yp, lem3),
        NamedResidual::new("lemLA4", yp_cof_yp, lem4),
        NamedResidual::new("rank_one_det", rank_one_lhs, rank_one_rhs),
        NamedResidual::new("cayley_hamilton_det", a.det(), det_cayley_hamilton(a)),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_with_kernel_e3() {
        let (l1, l2) = (1.7, -0.4);
        let a = Mat3::diag(l1, l2, 0.0);
        let res = matrix_identity_residuals(&a, Vec3::E3).unwrap();
        let lem3 = res.iter().find(|r| r.name == "lemLA3").unwrap();
        assert!((lem3.lhs - l1 * l2).abs() < 1e-15);
        assert!((lem3.rhs - l1 * l2).abs() < 1e-15);
        assert!(res.iter().all(|r| r.residual < 1e-14), "{res:?}");
    }

    #[test]
    fn zero_matrix_all_zero() {
        let y = Vec3::new(1.0, 2.0, -2.0).normalized();
        let res = matrix_identity_residuals(&Mat3::ZERO, y).unwrap();
        assert_eq!(res.len(), 6);
        // rank_one_det: det(yyᵀ) = 0 = 0 + 0.
        for r in &res {
            assert!(r.residual < 1e-15, "{r:?}");
        }
    }

    #[test]
    fn non_unit_direction_is_rejected() {
        let err = matrix_identity_residuals(&Mat3::IDENTITY, Vec3::new(1.0, 1.0, 0.0)).unwrap_err();
        assert!(matches!(err, MultilinearError::NotUnit { .. }));
        assert!(err.to_string().contains("unit"));
    }
}
