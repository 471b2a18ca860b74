//! The 9-dimensional picture of `f_y`: the matrix `A_y`, its eigenbasis, the
//! projections onto its eigenspaces and the convexified integrand `F_y`.

use nalgebra::{SMatrix, SVector};
use serde::Serialize;
use thiserror::Error;

use crate::gauss_graph::f_y;
use crate::multilinear::{relative_residual, Mat3, MultilinearError, Vec3, UNIT_TOLERANCE};

pub type Mat9 = SMatrix<f64, 9, 9>;
pub type Vec9 = SVector<f64, 9>;

/// `u·A_y u = FORM_SCALE · f_y(ζ)` for every `ζ` and unit `y`.
///
/// Measured by [`quadratic_consistency`]; energies never depend on it.
pub const FORM_SCALE: f64 = 12.0;
/// Tolerance of the eigen-relation guard run at construction.
pub const EIGEN_TOLERANCE: f64 = 1e-10;
/// Relative singular-value cutoff for Gram pseudo-inverses.
pub const RANK_THRESHOLD: f64 = 1e-8;
/// Tolerance for `u ∈ X̃_y`.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error(transparent)]
    NotUnit(#[from] MultilinearError),
    #[error("eigen-relation `{name}` violated: residual {residual:e}")]
    EigenRelation { name: String, residual: f64 },
    #[error("zero eigenspace has rank {0}, expected 5")]
    Rank(usize),
    #[error("u is not in X̃_y: `{constraint}` residual {residual:e}")]
    Membership { constraint: &'static str, residual: f64 },
    #[error("f_y(ζ) vanishes; the ratio is undefined")]
    ZeroForm,
}

/// `u[ζ] = (ζ¹¹, ζ¹², ζ¹³, ζ²¹, …, ζ³³)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FlattenedXi {
    pub u: [f64; 9],
}

impl FlattenedXi {
    pub fn from_mat(z: &Mat3) -> Self {
        Self { u: z.to_flat() }
    }

    pub fn to_mat(&self) -> Mat3 {
        Mat3::from_flat(&self.u)
    }

    pub fn to_vec9(&self) -> Vec9 {
        Vec9::from_column_slice(&self.u)
    }
}

/// `A_y` entry by entry.
pub fn a_matrix(y: Vec3) -> Mat9 {
    let (y1, y2, y3) = (y.x, y.y, y.z);
    #[rustfmt::skip]
    let rows = [
        [0.0, 0.0, 0.0, 0.0, -y3*y3, y2*y3, 0.0, y2*y3, -y2*y2],
        [0.0, 3.0*y3*y3, -3.0*y2*y3, -2.0*y3*y3, 0.0, 2.0*y1*y3, 2.0*y2*y3, -3.0*y1*y3, y1*y2],
        [0.0, -3.0*y2*y3, 3.0*y2*y2, 2.0*y2*y3, y1*y3, -3.0*y1*y2, -2.0*y2*y2, 2.0*y1*y2, 0.0],
        [0.0, -2.0*y3*y3, 2.0*y2*y3, 3.0*y3*y3, 0.0, -3.0*y1*y3, -3.0*y2*y3, 2.0*y1*y3, y1*y2],
        [-y3*y3, 0.0, y1*y3, 0.0, 0.0, 0.0, y1*y3, 0.0, -y1*y1],
        [y2*y3, 2.0*y1*y3, -3.0*y1*y2, -3.0*y1*y3, 0.0, 3.0*y1*y1, 2.0*y1*y2, -2.0*y1*y1, 0.0],
        [0.0, 2.0*y2*y3, -2.0*y2*y2, -3.0*y2*y3, y1*y3, 2.0*y1*y2, 3.0*y2*y2, -3.0*y1*y2, 0.0],
        [y2*y3, -3.0*y1*y3, 2.0*y1*y2, 2.0*y1*y3, 0.0, -2.0*y1*y1, -3.0*y1*y2, 3.0*y1*y1, 0.0],
        [-y2*y2, y1*y2, 0.0, y1*y2, -y1*y1, 0.0, 0.0, 0.0, 0.0],
    ];
    Mat9::from_fn(|i, j| rows[i][j])
}

/// The listed eigenvectors of `A_y`: `(v⁻¹, v⁵, v¹₁, v¹₂, [v⁰₁..v⁰₆])`.
pub fn eigenvectors(y: Vec3) -> (Vec9, Vec9, Vec9, Vec9, [Vec9; 6]) {
    let (y1, y2, y3) = (y.x, y.y, y.z);
    let v = |a: [f64; 9]| Vec9::from_column_slice(&a);
    let v_m1 = v([y1 * y1 - 1.0, y1 * y2, y1 * y3, y1 * y2, y2 * y2 - 1.0, y2 * y3, y1 * y3, y2 * y3, y3 * y3 - 1.0]);
    let v_5 = v([0.0, -y3, y2, y3, 0.0, -y1, -y2, y1, 0.0]);
    let v_1a = v([
        2.0 * y1 * y2 * y3,
        y2 * y2 * y3 - y3,
        y2 * y3 * y3 - y1 * y1 * y2,
        y2 * y2 * y3 - y3,
        0.0,
        y1 - y1 * y2 * y2,
        y2 * y3 * y3 - y1 * y1 * y2,
        y1 - y1 * y2 * y2,
        -2.0 * y1 * y2 * y3,
    ]);
    let v_1b = v([
        y1 * (y2 * y2 - y3 * y3),
        y2 * y2 * y2 - y2,
        y2 * y2 * y3 + y1 * y1 * y3,
        y2 * y2 * y2 - y2,
        y1 - y1 * y2 * y2,
        0.0,
        y2 * y2 * y3 + y1 * y1 * y3,
        0.0,
        -y1 * y1 * y1 - y1 * y2 * y2,
    ]);
    let mut v0 = [Vec9::zeros(); 6];
    for b in 0..3 {
        for k in 0..3 {
            // (0,..,y,..,0): y in block b.
            v0[b][3 * b + k] = y[k];
            // (y₁e_b, y₂e_b, y₃e_b).
            v0[3 + b][3 * k + b] = y[k];
        }
    }
    (v_m1, v_5, v_1a, v_1b, v0)
}

/// Orthogonal projector onto the span of `vs` and its rank.
///
/// Uses the SVD of the column matrix; singular values below
/// `RANK_THRESHOLD · σ_max` count as zero.
pub fn gram_projector(vs: &[Vec9]) -> (Mat9, usize) {
    let k = vs.len();
    let v = nalgebra::DMatrix::from_fn(9, k, |i, j| vs[j][i]);
    let svd = v.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.iter().fold(0.0f64, |a, &s| a.max(s));
    let mut p = Mat9::zeros();
    let mut rank = 0;
    for (n, &s) in svd.singular_values.iter().enumerate() {
        if smax > 0.0 && s > RANK_THRESHOLD * smax {
            let w9 = Vec9::from_iterator(u.column(n).iter().copied());
            p += w9 * w9.transpose();
            rank += 1;
        }
    }
    (p, rank)
}

/// `A_y` with its eigenvectors and spectral projectors.
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    pub y: Vec3,
    pub a: Mat9,
    pub v_m1: Vec9,
    pub v_5: Vec9,
    pub v_1a: Vec9,
    pub v_1b: Vec9,
    pub v0: [Vec9; 6],
    pi0: Mat9,
    pi_m1: Mat9,
    pi5: Mat9,
    pi1: Mat9,
}

fn check_unit(y: Vec3) -> Result<(), MultilinearError> {
    let n = y.norm();
    if (n - 1.0).abs() <= UNIT_TOLERANCE {
        Ok(())
    } else {
        Err(MultilinearError::NotUnit { norm: n })
    }
}

impl SpectralBasis {
    pub fn build(y: Vec3) -> Result<Self, SpectralError> {
        check_unit(y)?;
        Self::from_matrix(y, a_matrix(y))
    }

    /// Uses a caller-supplied `A`; the eigen-relations are checked against it.
    pub fn from_matrix(y: Vec3, a: Mat9) -> Result<Self, SpectralError> {
        check_unit(y)?;
        let (v_m1, v_5, v_1a, v_1b, v0) = eigenvectors(y);
        let mut named: Vec<(String, f64, Vec9)> = vec![
            ("v_m1".into(), -1.0, v_m1),
            ("v_5".into(), 5.0, v_5),
            ("v_1a".into(), 1.0, v_1a),
            ("v_1b".into(), 1.0, v_1b),
        ];
        named.extend(v0.iter().enumerate().map(|(i, v)| (format!("v0_{}", i + 1), 0.0, *v)));
        for (name, lambda, v) in &named {
            let residual = (a * v - v * *lambda).amax();
            if !(residual <= EIGEN_TOLERANCE) {
                return Err(SpectralError::EigenRelation { name: name.clone(), residual });
            }
        }
        let (pi0, rank) = gram_projector(&v0);
        if rank != 5 {
            return Err(SpectralError::Rank(rank));
        }
        let (pi_m1, _) = gram_projector(&[v_m1]);
        let (pi5, _) = gram_projector(&[v_5]);
        // v¹₁, v¹₂ can be dependent (v¹₂ = 0 at y = ±e₃); the eigenvalue-1
        // space is recovered as the complement of the other three.
        let pi1 = Mat9::identity() - pi0 - pi_m1 - pi5;
        Ok(Self { y, a, v_m1, v_5, v_1a, v_1b, v0, pi0, pi_m1, pi5, pi1 })
    }

    /// `|A v − λ v|_∞` for all ten listed eigenvectors.
    pub fn eigen_residuals(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("v_m1".to_string(), (self.a * self.v_m1 + self.v_m1).amax()),
            ("v_5".to_string(), (self.a * self.v_5 - self.v_5 * 5.0).amax()),
            ("v_1a".to_string(), (self.a * self.v_1a - self.v_1a).amax()),
            ("v_1b".to_string(), (self.a * self.v_1b - self.v_1b).amax()),
        ];
        out.extend(self.v0.iter().enumerate().map(|(i, v)| (format!("v0_{}", i + 1), (self.a * v).amax())));
        out
    }

    pub fn quadratic(&self, u: &Vec9) -> f64 {
        u.dot(&(self.a * u))
    }

    pub fn project_pi0(&self, u: &Vec9) -> Vec9 {
        self.pi0 * u
    }

    pub fn project_pi_minus1(&self, u: &Vec9) -> Vec9 {
        self.pi_m1 * u
    }

    pub fn project_pi5(&self, u: &Vec9) -> Vec9 {
        self.pi5 * u
    }

    pub fn project_pi1(&self, u: &Vec9) -> Vec9 {
        self.pi1 * u
    }

    /// `[v⁰₁·u, v⁰₂·u, v⁰₃·u, u·(e₁,e₂,e₃)]`; all zero iff `u ∈ X̃_y`.
    pub fn membership_residuals(&self, u: &Vec9) -> [f64; 4] {
        [self.v0[0].dot(u), self.v0[1].dot(u), self.v0[2].dot(u), u[0] + u[4] + u[8]]
    }

    /// `Σ_{i=4..6} (v⁰ᵢ·u)²`, valid for `u ∈ X̃_y`.
    pub fn norm_pi0_fast(&self, u: &Vec9) -> Result<f64, SpectralError> {
        const NAMES: [&str; 4] = ["v0_1·u", "v0_2·u", "v0_3·u", "trace"];
        let scale = 1f64.max(u.norm());
        for (name, r) in NAMES.iter().zip(self.membership_residuals(u)) {
            if !(r.abs() / scale <= MEMBERSHIP_TOLERANCE) {
                return Err(SpectralError::Membership { constraint: name, residual: r.abs() / scale });
            }
        }
        Ok(self.v0[3..].iter().map(|v| v.dot(u).powi(2)).sum())
    }

    /// `F_y(u) = u·A_y u + |π₀u|^{3/2} + 2|π₋₁u|²`.
    pub fn f_convex(&self, u: &Vec9) -> f64 {
        self.quadratic(u) + self.project_pi0(u).norm().powf(1.5) + 2.0 * self.project_pi_minus1(u).norm_squared()
    }

    /// `|π₋₁u|² + |π₁u|² + 5|π₅u|² + |π₀u|^{3/2}`.
    pub fn f_convex_eigen(&self, u: &Vec9) -> f64 {
        self.project_pi_minus1(u).norm_squared()
            + self.project_pi1(u).norm_squared()
            + 5.0 * self.project_pi5(u).norm_squared()
            + self.project_pi0(u).norm().powf(1.5)
    }

    /// `F_y(u) − |u − π₀u|² − |π₀u|^{3/2}`, nonnegative.
    pub fn growth_slack(&self, u: &Vec9) -> f64 {
        let p0 = self.project_pi0(u);
        self.f_convex(u) - (u - p0).norm_squared() - p0.norm().powf(1.5)
    }
}

/// `(u·A_y u / f_y(ζ), |u·A_y u − FORM_SCALE·f_y(ζ)|)` relative.
pub fn quadratic_consistency(zeta: &Mat3, y: Vec3) -> Result<(f64, f64), SpectralError> {
    check_unit(y)?;
    let f = f_y(zeta, y)?;
    let u = FlattenedXi::from_mat(zeta).to_vec9();
    let q = a_matrix(y);
    let uau = u.dot(&(q * u));
    if f == 0.0 {
        return Err(SpectralError::ZeroForm);
    }
    Ok((uau / f, relative_residual(uau, FORM_SCALE * f)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(i: usize) -> Vec9 {
        let mut v = Vec9::zeros();
        v[i] = 1.0;
        v
    }

    #[test]
    fn transcription_is_symmetric() {
        let y = Vec3::new(0.3, -0.5, 0.8).normalized();
        let a = a_matrix(y);
        assert_eq!(a, a.transpose());
    }

    #[test]
    fn north_pole_basis() {
        let b = SpectralBasis::build(Vec3::E3).unwrap();
        let v5 = Vec9::from_column_slice(&[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(b.v_5, v5);
        assert_eq!(b.a * v5, v5 * 5.0);
        assert_eq!(b.quadratic(&v5), 10.0);
        assert!((b.f_convex(&v5) - 10.0).abs() < 1e-12);
        for i in [2, 5, 6, 7, 8] {
            assert!((b.project_pi0(&e(i)) - e(i)).amax() < 1e-12, "e{}", i + 1);
        }
        for i in [0, 1, 3, 4] {
            assert!(b.project_pi0(&e(i)).amax() < 1e-12);
        }
        assert!((b.project_pi0(&e(6)).norm_squared() - 1.0).abs() < 1e-12);
        assert_eq!(b.norm_pi0_fast(&e(6)).unwrap(), 1.0);
        assert_eq!(b.v_1b, Vec9::zeros());
    }

    #[test]
    fn hand_evaluated_ratios() {
        let zeta5 = Mat3::from_flat(&[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let (r, res) = quadratic_consistency(&zeta5, Vec3::E3).unwrap();
        assert!((r - 12.0).abs() < 1e-12 && res < 1e-12);
        assert!((f_y(&zeta5, Vec3::E3).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        let (r, _) = quadratic_consistency(&Mat3::diag(1.0, -1.0, 0.0), Vec3::E3).unwrap();
        assert!((r - 12.0).abs() < 1e-12);
        assert_eq!(quadratic_consistency(&Mat3::ZERO, Vec3::E3), Err(SpectralError::ZeroForm));
    }

    #[test]
    fn corrupted_entry_is_caught() {
        let y = Vec3::new(1.0, 2.0, 2.0) * (1.0 / 3.0);
        let mut a = a_matrix(y);
        a[(1, 6)] += 1e-6;
        assert!(matches!(SpectralBasis::from_matrix(y, a), Err(SpectralError::EigenRelation { .. })));
        assert!(matches!(SpectralBasis::build(Vec3::new(1.0, 1.0, 0.0)), Err(SpectralError::NotUnit(_))));
    }

    #[test]
    fn projections_are_idempotent_and_resolve_identity() {
        let b = SpectralBasis::build(Vec3::new(0.48, 0.6, 0.64)).unwrap();
        let u = Vec9::from_fn(|i, _| (i as f64 * 0.7).sin());
        let p = b.project_pi0(&u);
        assert!((b.project_pi0(&p) - p).amax() < 1e-12);
        let sum = b.project_pi0(&u) + b.project_pi_minus1(&u) + b.project_pi1(&u) + b.project_pi5(&u);
        assert!((sum - u).amax() < 1e-14);
        assert!((b.f_convex(&u) - b.f_convex_eigen(&u)).abs() < 1e-10);
        assert!(b.growth_slack(&u) >= -1e-12);
        assert!(u.norm_squared() >= p.norm_squared());
        assert!(matches!(b.norm_pi0_fast(&u), Err(SpectralError::Membership { .. })));
    }

    #[test]
    fn kernel_has_rank_five_on_a_grid_of_directions() {
        for i in 0..24 {
            for j in 0..12 {
                let (phi, th) = (i as f64 * 0.2618, j as f64 * 0.2618 + 0.01);
                let y = Vec3::new(th.sin() * phi.cos(), th.sin() * phi.sin(), th.cos());
                let b = SpectralBasis::build(y).unwrap_or_else(|e| panic!("{y:?}: {e}"));
                let p = b.project_pi0(&b.v0[3]);
                assert!((p - b.v0[3]).amax() < 1e-12);
            }
        }
        SpectralBasis::build(Vec3::new(1.0, 1.0, 1.0).normalized()).unwrap();
    }
}
