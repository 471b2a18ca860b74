//! Tilt and bending energies, and the curvature integrals of the limit functional.
//!
//! Every integral is a sum over faces of a per-face value times the face
//! area, reduced with [`det_sum`](crate::reduce::det_sum).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::director::{all_face_data, make_normal_director, DirectorError, DirectorField};
use crate::mesh::TriMesh;
use crate::multilinear::{quadratic_form_q, quadratic_form_q_eigen, Vec3};
use crate::reduce::det_sum;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("tilt parameter must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("tilt integrand undefined at face {face}: θ̄·ν = {dot}")]
    TiltFoldOver { face: usize, dot: f64 },
    #[error(transparent)]
    Director(#[from] DirectorError),
}

/// Terms of `Q_ε` plus the curvature integrals of the surface itself.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub tilt: f64,
    pub bending: f64,
    pub total: f64,
    pub area: f64,
    /// `∫ H²/4` with the normal director.
    pub willmore_quarter: f64,
    /// `∫ K` with the normal director.
    pub total_gauss: f64,
}

/// `1/(θ·n) − 1` for unit `θ`, `n`, evaluated as `½|θ − n|² / (θ·n)`.
///
/// The two expressions agree for unit vectors; this one has no cancellation
/// for small tilt and vanishes bitwise when `θ = n`.
pub fn tilt_density(theta: Vec3, n: Vec3) -> f64 {
    let d = theta - n;
    0.5 * d.norm_sq() / theta.dot(n)
}

/// Per-face normals used by the tilt integrand: the normalized sum of the
/// three angle-weighted vertex normals.
///
/// Averaging the vertex normals the same way the director is averaged makes
/// the tilt vanish identically for the normal director.
pub fn tilt_normals(mesh: &TriMesh) -> Vec<Vec3> {
    let normal = make_normal_director(mesh);
    mesh.faces().iter().map(|&f| face_average(normal.values(), f)).collect()
}

fn face_average(values: &[Vec3], face: [usize; 3]) -> Vec3 {
    (values[face[0]] + values[face[1]] + values[face[2]]).normalized()
}

fn check_eps(eps: f64) -> Result<(), EnergyError> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(EnergyError::BadEpsilon(eps))
    }
}

/// `ε⁻² Σ_f (1/(θ_f·n_f) − 1) area_f` for explicit per-face directors and normals.
pub fn tilt_energy_per_face(areas: &[f64], thetas: &[Vec3], normals: &[Vec3], eps: f64) -> Result<f64, EnergyError> {
    check_eps(eps)?;
    let dens: Vec<f64> = thetas
        .par_iter()
        .zip(normals)
        .enumerate()
        .map(|(face, (&t, &n))| {
            let dot = t.dot(n);
            if dot > 0.0 {
                Ok(tilt_density(t, n))
            } else {
                Err(EnergyError::TiltFoldOver { face, dot })
            }
        })
        .collect::<Result<_, _>>()?;
    let weighted: Vec<f64> = dens.iter().zip(areas).map(|(d, a)| d * a).collect();
    Ok(det_sum(&weighted) / (eps * eps))
}

/// Tilt term `ε⁻² ∫ (1/(θ·ν) − 1)`.
pub fn tilt_energy(mesh: &TriMesh, field: &DirectorField, eps: f64) -> Result<f64, EnergyError> {
    if field.len() != mesh.num_vertices() {
        return Err(DirectorError::LengthMismatch { expected: mesh.num_vertices(), found: field.len() }.into());
    }
    let thetas: Vec<Vec3> = mesh.faces().iter().map(|&f| face_average(field.values(), f)).collect();
    tilt_energy_per_face(&mesh.face_areas(), &thetas, &tilt_normals(mesh), eps)
}

/// Bending term `∫ Q(L)`.
pub fn bending_energy(mesh: &TriMesh, field: &DirectorField) -> Result<f64, EnergyError> {
    let data = all_face_data(mesh, field)?;
    let v: Vec<f64> = data.iter().map(|(fr, d)| quadratic_form_q(&d.l) * fr.area).collect();
    Ok(det_sum(&v))
}

/// Bending term through the eigenvalue form `(λ₁+λ₂)²/6 + (λ₁²+λ₂²)/12`.
pub fn bending_energy_eigen(mesh: &TriMesh, field: &DirectorField) -> Result<f64, EnergyError> {
    let data = all_face_data(mesh, field)?;
    let v: Vec<f64> = data
        .iter()
        .map(|(fr, d)| quadratic_form_q_eigen(d.lambda1, d.lambda2) * fr.area)
        .collect();
    Ok(det_sum(&v))
}

/// `(∫ H²/4, ∫ K)` with `H = tr L`, `K = tr cof L` for the normal director.
pub fn curvature_integrals(mesh: &TriMesh) -> Result<(f64, f64), EnergyError> {
    let data = all_face_data(mesh, &make_normal_director(mesh))?;
    let h: Vec<f64> = data.iter().map(|(fr, d)| 0.25 * d.l.trace().powi(2) * fr.area).collect();
    let k: Vec<f64> = data.iter().map(|(fr, d)| d.l.trace_cofactor() * fr.area).collect();
    Ok((det_sum(&h), det_sum(&k)))
}

/// `Q₀ = ∫ (H²/4 − K/6)`, the bending energy of the normal director.
pub fn q_zero(mesh: &TriMesh) -> Result<f64, EnergyError> {
    bending_energy(mesh, &make_normal_director(mesh))
}

/// Full `Q_ε` with its terms and the surface curvature integrals.
pub fn q_epsilon(mesh: &TriMesh, field: &DirectorField, eps: f64) -> Result<EnergyBreakdown, EnergyError> {
    let tilt = tilt_energy(mesh, field, eps)?;
    let bending = bending_energy(mesh, field)?;
    let (willmore_quarter, total_gauss) = curvature_integrals(mesh)?;
    Ok(EnergyBreakdown {
        tilt,
        bending,
        total: tilt + bending,
        area: mesh.total_area(),
        willmore_quarter,
        total_gauss,
    })
}

/// Discrete `½ ∫ |w|²` with `w` averaged over each face and projected onto
/// the tilt normal; the small-ε limit of the tilt term.
pub fn half_w_squared(mesh: &TriMesh, w: &[Vec3]) -> f64 {
    let normals = tilt_normals(mesh);
    let v: Vec<f64> = mesh
        .faces()
        .iter()
        .enumerate()
        .map(|(f, &[a, b, c])| {
            let wf = ((w[a] + w[b] + w[c]) * (1.0 / 3.0)).reject(normals[f]);
            0.5 * wf.norm_sq() * mesh.face_area(f)
        })
        .collect();
    det_sum(&v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::director::{make_tilted_director, TangentField};
    use crate::mesh::{generate_primitive, PrimitiveSpec};
    use std::f64::consts::PI;

    fn sphere(r: f64, level: u32) -> TriMesh {
        generate_primitive(PrimitiveSpec::Sphere { radius: r, level }).unwrap()
    }

    #[test]
    fn density_matches_direct_formula() {
        let n = Vec3::E3;
        for alpha in [1e-3f64, 0.1, 0.7, 1.3] {
            let t = Vec3::new(alpha.sin(), 0.0, alpha.cos());
            let direct = 1.0 / alpha.cos() - 1.0;
            assert!((tilt_density(t, n) - direct).abs() <= 1e-14 * direct.max(1.0));
        }
        assert_eq!(tilt_density(n, n), 0.0);
    }

    #[test]
    fn per_face_override_with_exact_normals_is_zero() {
        let m = sphere(1.0, 2);
        let normals: Vec<Vec3> = (0..m.num_faces()).map(|f| m.face_normal(f)).collect();
        assert_eq!(tilt_energy_per_face(&m.face_areas(), &normals, &normals, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn constant_tilt_on_flat_patch_has_closed_form() {
        let (alpha, eps) = (0.4f64, 0.05);
        let areas = [0.5, 0.25, 1.0];
        let t = Vec3::new(alpha.sin() * 0.6, alpha.sin() * 0.8, alpha.cos());
        let got = tilt_energy_per_face(&areas, &[t; 3], &[Vec3::E3; 3], eps).unwrap();
        let want = (1.0 / alpha.cos() - 1.0) * 1.75 / (eps * eps);
        assert!((got / want - 1.0).abs() < 1e-13, "{got} vs {want}");
    }

    #[test]
    fn normal_director_has_zero_tilt_for_every_eps() {
        let m = sphere(1.0, 3);
        let field = make_normal_director(&m);
        let base = q_epsilon(&m, &field, 1.0).unwrap();
        assert_eq!(base.tilt, 0.0);
        for eps in [0.5, 0.1, 1e-3] {
            let e = q_epsilon(&m, &field, eps).unwrap();
            assert_eq!(e, base);
            assert_eq!(e.total.to_bits(), e.bending.to_bits());
        }
    }

    #[test]
    fn bending_forms_agree() {
        let m = sphere(1.0, 3);
        let field = make_tilted_director(&m, &TangentField::E1.sample(&m), 0.2).unwrap();
        let a = bending_energy(&m, &field).unwrap();
        let b = bending_energy_eigen(&m, &field).unwrap();
        assert!((a - b).abs() <= 1e-10 * a.abs());
    }

    #[test]
    fn sphere_limit_value_and_scale_invariance() {
        let target = 10.0 * PI / 3.0;
        let vals: Vec<f64> = [0.5, 1.0, 2.0].iter().map(|&r| q_zero(&sphere(r, 4)).unwrap()).collect();
        for v in &vals {
            assert!((v / target - 1.0).abs() < 1e-2, "{vals:?}");
        }
        let spread = vals.iter().copied().fold(f64::MIN, f64::max) - vals.iter().copied().fold(f64::MAX, f64::min);
        assert!(spread / target < 1e-2);
        let (_, k) = curvature_integrals(&sphere(1.0, 4)).unwrap();
        assert!((k / (4.0 * PI) - 1.0).abs() < 2e-2);
    }

    #[test]
    fn tilt_term_tends_to_half_w_squared() {
        let m = sphere(1.0, 4);
        let w = TangentField::E1.sample(&m);
        let oracle = half_w_squared(&m, &w);
        // ∫(1 − x₁²)/2 over the unit sphere.
        assert!((oracle / (4.0 * PI / 3.0) - 1.0).abs() < 1e-2);
        let eps = 0.01;
        let tilt = tilt_energy(&m, &make_tilted_director(&m, &w, eps).unwrap(), eps).unwrap();
        assert!((tilt / oracle - 1.0).abs() < 5e-3, "{tilt} vs {oracle}");
    }

    #[test]
    fn nonpositive_eps_is_rejected() {
        let m = sphere(1.0, 1);
        let field = make_normal_director(&m);
        assert!(matches!(tilt_energy(&m, &field, 0.0), Err(EnergyError::BadEpsilon(_))));
        assert!(matches!(q_epsilon(&m, &field, f64::NAN), Err(EnergyError::BadEpsilon(_))));
    }

    #[test]
    fn breakdown_json_field_names() {
        let e = EnergyBreakdown { tilt: 1.0, bending: 2.0, total: 3.0, area: 4.0, willmore_quarter: 5.0, total_gauss: 6.0 };
        let v: serde_json::Value = serde_json::to_value(e).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        let mut want = vec!["tilt", "bending", "total", "area", "willmore_quarter", "total_gauss"];
        want.sort_unstable();
        let mut got = keys.clone();
        got.sort_unstable();
        assert_eq!(got, want);
    }
}
