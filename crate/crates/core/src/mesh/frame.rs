use serde::Serialize;

use super::{MeshError, TriMesh};
use crate::multilinear::Vec3;

/// Right-handed orthonormal frame `{τ₁, τ₂, ν}` of a face plus its area.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FaceFrame {
    pub tau1: Vec3,
    pub tau2: Vec3,
    pub nu: Vec3,
    pub area: f64,
}

impl FaceFrame {
    /// `det(τ₁ | τ₂ | ν)`.
    pub fn orientation(&self) -> f64 {
        self.tau1.cross(self.tau2).dot(self.nu)
    }

    /// Builds a frame from a unit normal and any vector not parallel to it.
    pub fn from_normal_and_seed(nu: Vec3, seed: Vec3, area: f64) -> Self {
        let tau1 = seed.reject(nu).normalized();
        let tau2 = nu.cross(tau1);
        Self { tau1, tau2, nu, area }
    }
}

fn checked_face(mesh: &TriMesh, face: usize) -> Result<(), MeshError> {
    if face >= mesh.num_faces() {
        return Err(MeshError::FaceOutOfRange { face, count: mesh.num_faces() });
    }
    if !(mesh.face_area_vector(face).norm() > 0.0) {
        return Err(MeshError::DegenerateFace { face });
    }
    Ok(())
}

/// Frame with τ₁ along the first edge `p₁ − p₀`.
pub fn face_frame(mesh: &TriMesh, face: usize) -> Result<FaceFrame, MeshError> {
    checked_face(mesh, face)?;
    let [p0, p1, _] = mesh.face_positions(face);
    let nu = mesh.face_normal(face);
    let tau1 = (p1 - p0).normalized();
    let tau2 = nu.cross(tau1);
    Ok(FaceFrame { tau1, tau2, nu, area: mesh.face_area(face) })
}

/// Frame rotated in-plane by `angle` relative to [`face_frame`].
pub fn face_frame_rotated(mesh: &TriMesh, face: usize, angle: f64) -> Result<FaceFrame, MeshError> {
    let f = face_frame(mesh, face)?;
    let (s, c) = angle.sin_cos();
    let tau1 = (f.tau1 * c + f.tau2 * s).normalized();
    Ok(FaceFrame { tau1, tau2: f.nu.cross(tau1), ..f })
}

/// Angle-weighted vertex normals, normalized.
pub fn vertex_normals(mesh: &TriMesh) -> Vec<Vec3> {
    let mut acc = vec![Vec3::ZERO; mesh.num_vertices()];
    for (f, face) in mesh.faces().iter().enumerate() {
        let n = mesh.face_normal(f);
        let p = mesh.face_positions(f);
        for k in 0..3 {
            let a = (p[(k + 1) % 3] - p[k]).normalized();
            let b = (p[(k + 2) % 3] - p[k]).normalized();
            let angle = a.cross(b).norm().atan2(a.dot(b));
            acc[face[k]] += n * angle;
        }
    }
    acc.into_iter().map(Vec3::normalized).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ccw_triangle_in_plane_has_normal_e3() {
        let m = TriMesh::new_unchecked(
            vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 0.0)],
            vec![[0, 1, 2]],
            None,
        );
        let f = face_frame(&m, 0).unwrap();
        assert_eq!(f.nu, Vec3::E3);
        assert_eq!(f.tau1, Vec3::E1);
        assert_eq!(f.tau2, Vec3::E2);
        assert_eq!(f.area, 0.5);
        assert_eq!(f.orientation(), 1.0);
    }

    #[test]
    fn out_of_range_and_degenerate_faces_error() {
        let m = TriMesh::new_unchecked(
            vec![Vec3::ZERO, Vec3::E1, Vec3::E1 * 2.0],
            vec![[0, 1, 2]],
            None,
        );
        assert!(matches!(face_frame(&m, 0), Err(MeshError::DegenerateFace { face: 0 })));
        assert!(matches!(face_frame(&m, 3), Err(MeshError::FaceOutOfRange { .. })));
    }

    #[test]
    fn rotated_frame_stays_orthonormal() {
        let m = TriMesh::new_unchecked(
            vec![Vec3::new(0.1, 0.0, 0.3), Vec3::new(1.0, 0.2, 0.0), Vec3::new(0.4, 1.0, 0.5)],
            vec![[0, 1, 2]],
            None,
        );
        let f = face_frame_rotated(&m, 0, 0.7).unwrap();
        assert!((f.orientation() - 1.0).abs() < 1e-14);
        assert!(f.tau1.dot(f.nu).abs() < 1e-15);
        assert!((f.tau2.norm() - 1.0).abs() < 1e-15);
    }
}
