//! Closed oriented triangle meshes.
//!
//! A [`TriMesh`] built through [`TriMesh::new`] is validated: every edge is
//! shared by exactly two faces traversing it in opposite directions, the
//! enclosed signed volume is positive (outward orientation) and no face is
//! degenerate. All surface integrals use the face areas from
//! [`TriMesh::face_areas`] with one quadrature point per face.

mod frame;
mod off;
mod primitives;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::multilinear::Vec3;
use crate::reduce::det_sum;

pub use frame::{face_frame, face_frame_rotated, vertex_normals, FaceFrame};
pub use off::{load_off, load_off_unchecked, parse_off, save_off, sidecar_path, write_off};
pub use primitives::{generate_primitive, refine, PrimitiveSpec};

/// Faces with area below this fraction of the mean face area are degenerate.
pub const DEGENERATE_AREA_FRACTION: f64 = 1e-12;

/// Exact-geometry description of a generated surface, used for refinement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AnalyticTag {
    /// Icosahedron subdivided `level` times, vertices on the sphere of `radius`.
    Sphere { radius: f64, level: u32 },
    /// Parametric torus grid, `nu` steps around the axis, `nv` around the tube.
    Torus { major_radius: f64, minor_radius: f64, nu: usize, nv: usize },
}

/// Problems found by [`TriMesh::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum ValidationIssue {
    IndexOutOfRange { face: usize, index: usize },
    RepeatedVertex { face: usize },
    /// An undirected edge used by a number of faces other than two.
    NonManifoldEdge { a: usize, b: usize, faces: usize },
    /// An edge traversed twice in the same direction (a flipped neighbour).
    InconsistentOrientation { a: usize, b: usize },
    DegenerateFace { face: usize, area: f64 },
    NonPositiveVolume { volume: f64 },
    NonFiniteVertex { vertex: usize },
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::IndexOutOfRange { face, index } => write!(f, "face {face} references missing vertex {index}"),
            Self::RepeatedVertex { face } => write!(f, "face {face} repeats a vertex"),
            Self::NonManifoldEdge { a, b, faces } => write!(f, "edge ({a},{b}) is shared by {faces} faces"),
            Self::InconsistentOrientation { a, b } => {
                write!(f, "edge ({a},{b}) is traversed twice in the same direction")
            }
            Self::DegenerateFace { face, area } => write!(f, "face {face} is degenerate (area {area:e})"),
            Self::NonPositiveVolume { volume } => {
                write!(f, "signed volume {volume:e} is not positive (faces are not outward oriented)")
            }
            Self::NonFiniteVertex { vertex } => write!(f, "vertex {vertex} has a non-finite coordinate"),
        }
    }
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid mesh: {}", join_issues(.0))]
    Validation(Vec<ValidationIssue>),
    #[error("face {face} is degenerate")]
    DegenerateFace { face: usize },
    #[error("face index {face} out of range ({count} faces)")]
    FaceOutOfRange { face: usize, count: usize },
    #[error("invalid primitive parameters: {0}")]
    Parameter(String),
    #[error("refinement needs an analytic tag (sphere or torus); arbitrary meshes are not refined")]
    Untagged,
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("sidecar {path}: {source}")]
    Sidecar { path: String, source: serde_json::Error },
}

fn join_issues(issues: &[ValidationIssue]) -> String {
    issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Triangle surface mesh with counter-clockwise (outward) faces.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    tag: Option<AnalyticTag>,
}

impl TriMesh {
    /// Builds and validates a closed, outward-oriented mesh.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>, tag: Option<AnalyticTag>) -> Result<Self, MeshError> {
        let mesh = Self { vertices, faces, tag };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Builds a mesh without validation. Open patches used as fixtures go
    /// through here; every operation documented for closed meshes may give
    /// meaningless results on them.
    pub fn new_unchecked(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>, tag: Option<AnalyticTag>) -> Self {
        Self { vertices, faces, tag }
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn tag(&self) -> Option<AnalyticTag> {
        self.tag
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn face_positions(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// `(p₁ − p₀) × (p₂ − p₀)`; twice the area times the unit normal.
    pub fn face_area_vector(&self, face: usize) -> Vec3 {
        let [p0, p1, p2] = self.face_positions(face);
        (p1 - p0).cross(p2 - p0)
    }

    pub fn face_area(&self, face: usize) -> f64 {
        0.5 * self.face_area_vector(face).norm()
    }

    /// Flat face normal (unit, outward for a valid mesh).
    pub fn face_normal(&self, face: usize) -> Vec3 {
        self.face_area_vector(face).normalized()
    }

    pub fn face_centroid(&self, face: usize) -> Vec3 {
        let [p0, p1, p2] = self.face_positions(face);
        (p0 + p1 + p2) * (1.0 / 3.0)
    }

    /// Per-face areas: the single quadrature weight table for every integral.
    pub fn face_areas(&self) -> Vec<f64> {
        (0..self.faces.len()).map(|f| self.face_area(f)).collect()
    }

    pub fn total_area(&self) -> f64 {
        det_sum(&self.face_areas())
    }

    /// Signed enclosed volume, positive for outward faces.
    pub fn signed_volume(&self) -> f64 {
        let vols: Vec<f64> = (0..self.faces.len())
            .map(|f| {
                let [p0, p1, p2] = self.face_positions(f);
                p0.dot(p1.cross(p2)) / 6.0
            })
            .collect();
        det_sum(&vols)
    }

    /// Undirected edges `(min, max)` in ascending order.
    pub fn edges(&self) -> BTreeSet<(usize, usize)> {
        self.faces
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect()
    }

    /// `V − E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges().len() as i64 + self.faces.len() as i64
    }

    /// Checks the closed-manifold, orientation and non-degeneracy invariants.
    pub fn validate(&self) -> Result<(), MeshError> {
        self.validate_with(true)
    }

    /// Like [`TriMesh::validate`] but allows boundary edges and skips the
    /// volume check.
    pub fn validate_open(&self) -> Result<(), MeshError> {
        self.validate_with(false)
    }

    fn validate_with(&self, closed: bool) -> Result<(), MeshError> {
        let mut issues = Vec::new();
        let nv = self.vertices.len();
        for (v, p) in self.vertices.iter().enumerate() {
            if !p.is_finite() {
                issues.push(ValidationIssue::NonFiniteVertex { vertex: v });
            }
        }
        for (f, face) in self.faces.iter().enumerate() {
            if let Some(&index) = face.iter().find(|&&i| i >= nv) {
                issues.push(ValidationIssue::IndexOutOfRange { face: f, index });
            } else if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
                issues.push(ValidationIssue::RepeatedVertex { face: f });
            }
        }
        if !issues.is_empty() {
            return Err(MeshError::Validation(issues));
        }

        let mut directed: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for &[a, b, c] in &self.faces {
            for e in [(a, b), (b, c), (c, a)] {
                *directed.entry(e).or_default() += 1;
            }
        }
        let mut undirected: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (&(a, b), &n) in &directed {
            *undirected.entry((a.min(b), a.max(b))).or_default() += n;
        }
        for (&(a, b), &n) in &undirected {
            if n == 1 && !closed {
                continue;
            }
            if n != 2 {
                issues.push(ValidationIssue::NonManifoldEdge { a, b, faces: n });
            } else if directed.get(&(a, b)).copied().unwrap_or(0) != 1 {
                issues.push(ValidationIssue::InconsistentOrientation { a, b });
            }
        }

        let areas = self.face_areas();
        if !areas.is_empty() {
            let mean = det_sum(&areas) / areas.len() as f64;
            for (f, &area) in areas.iter().enumerate() {
                if !(area > DEGENERATE_AREA_FRACTION * mean) {
                    issues.push(ValidationIssue::DegenerateFace { face: f, area });
                }
            }
        }

        if closed && issues.is_empty() {
            let volume = self.signed_volume();
            if !(volume > 0.0) {
                issues.push(ValidationIssue::NonPositiveVolume { volume });
            }
        }

        if issues.is_empty() {
            Ok(())
        } else {
            Err(MeshError::Validation(issues))
        }
    }

    /// SHA-256 over the little-endian vertex coordinate bits and face indices.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.vertices.len() as u64).to_le_bytes());
        for p in &self.vertices {
            for c in p.to_array() {
                h.update(c.to_bits().to_le_bytes());
            }
        }
        h.update((self.faces.len() as u64).to_le_bytes());
        for face in &self.faces {
            for &i in face {
                h.update((i as u64).to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tetrahedron() -> TriMesh {
        let v = vec![
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(1.0, -1.0, -1.0),
            Vec3::new(-1.0, 1.0, -1.0),
            Vec3::new(-1.0, -1.0, 1.0),
        ];
        let f = vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]];
        TriMesh::new(v, f, None).unwrap()
    }

    #[test]
    fn tetrahedron_is_valid() {
        let t = tetrahedron();
        assert_eq!(t.euler_characteristic(), 2);
        assert!(t.signed_volume() > 0.0);
        assert!((t.signed_volume() - 8.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn flipped_face_is_reported_with_its_edge() {
        let t = tetrahedron();
        let mut faces = t.faces().to_vec();
        faces[0] = [0, 2, 1];
        let err = TriMesh::new(t.vertices().to_vec(), faces, None).unwrap_err();
        match &err {
            MeshError::Validation(issues) => {
                assert!(issues.iter().any(|i| matches!(i, ValidationIssue::InconsistentOrientation { .. })));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(err.to_string().contains("edge ("));
    }

    #[test]
    fn inward_orientation_is_rejected() {
        let t = tetrahedron();
        let faces = t.faces().iter().map(|&[a, b, c]| [a, c, b]).collect();
        let err = TriMesh::new(t.vertices().to_vec(), faces, None).unwrap_err();
        match err {
            MeshError::Validation(issues) => {
                assert!(matches!(issues[0], ValidationIssue::NonPositiveVolume { .. }))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn open_surface_is_rejected() {
        let t = tetrahedron();
        let faces = t.faces()[..3].to_vec();
        assert!(matches!(TriMesh::new(t.vertices().to_vec(), faces.clone(), None), Err(MeshError::Validation(_))));
        TriMesh::new_unchecked(t.vertices().to_vec(), faces, None).validate_open().unwrap();
    }

    #[test]
    fn degenerate_face_is_rejected() {
        // Octahedron with one vertex moved onto the segment between two neighbours.
        let mut v = vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, -1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 0.0, -1.0),
        ];
        let f = vec![
            [0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4],
            [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5],
        ];
        assert!(TriMesh::new(v.clone(), f.clone(), None).is_ok());
        v[2] = Vec3::new(0.5, 0.0, 0.5);
        let err = TriMesh::new(v, f, None).unwrap_err();
        assert!(err.to_string().contains("degenerate"), "{err}");
    }

    #[test]
    fn content_hash_is_stable_and_sensitive() {
        let t = tetrahedron();
        assert_eq!(t.content_hash(), tetrahedron().content_hash());
        let mut v = t.vertices().to_vec();
        v[0].x += 1e-15;
        let moved = TriMesh::new_unchecked(v, t.faces().to_vec(), None);
        assert_ne!(t.content_hash(), moved.content_hash());
    }
}
