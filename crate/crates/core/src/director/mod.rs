//! Director fields and the per-face extension operator `L`.
//!
//! On a flat face the linear interpolant of the vertex directors has a
//! constant tangential gradient `Dθ`. Its extension `L` to R³ is fixed by
//! `L θ̄ = 0`, where `θ̄` is the renormalized vertex average. The discrete
//! extension is then projected so that its range lies in `θ̄⊥` and
//! symmetrized; the pre-symmetrization asymmetry is kept as a diagnostic.

mod fields;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::mesh::{face_frame, vertex_normals, FaceFrame, MeshError, TriMesh};
use crate::multilinear::{complement_projector, sym2_eigen, Mat3, Vec3};

pub use fields::{fold_over_faces, make_normal_director, make_tilted_director, tilted_values_unchecked, TangentField};

/// Tolerance on `|θᵥ| − 1`.
pub const UNIT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DirectorError {
    #[error("director has {found} values but the mesh has {expected} vertices")]
    LengthMismatch { expected: usize, found: usize },
    #[error("director at vertex {vertex} is not unit length (|θ| = {norm})")]
    NotUnit { vertex: usize, norm: f64 },
    #[error("director at vertex {vertex} does not point outward (θ·ν = {dot})")]
    VertexFoldOver { vertex: usize, dot: f64 },
    #[error("graph folds over at face {face} (vertices {vertices:?}): θ̄·ν = {dot}")]
    FaceFoldOver { face: usize, vertices: [usize; 3], dot: f64 },
    #[error("unknown tangent field `{0}` (expected zero, e1, e2, e3 or swirl)")]
    UnknownField(String),
    #[error("tilt parameter must be finite and nonnegative, got {0}")]
    BadEpsilon(f64),
    #[error("director JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Per-vertex unit directors pointing to the outer side of the surface.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectorField {
    values: Vec<Vec3>,
}

impl DirectorField {
    /// Validates unit length and `θᵥ·νᵥ > 0` against angle-weighted vertex normals.
    pub fn new(mesh: &TriMesh, values: Vec<Vec3>) -> Result<Self, DirectorError> {
        let normals = vertex_normals(mesh);
        Self::with_normals(&normals, values)
    }

    pub(crate) fn with_normals(normals: &[Vec3], values: Vec<Vec3>) -> Result<Self, DirectorError> {
        if values.len() != normals.len() {
            return Err(DirectorError::LengthMismatch { expected: normals.len(), found: values.len() });
        }
        for (vertex, (&t, &n)) in values.iter().zip(normals).enumerate() {
            let norm = t.norm();
            if !((norm - 1.0).abs() <= UNIT_TOLERANCE) {
                return Err(DirectorError::NotUnit { vertex, norm });
            }
            let dot = t.dot(n);
            if !(dot > 0.0) {
                return Err(DirectorError::VertexFoldOver { vertex, dot });
            }
        }
        Ok(Self { values })
    }

    /// Skips validation. Used for synthetic fixtures such as open patches.
    pub fn new_unchecked(values: Vec<Vec3>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// JSON array of per-vertex `[x, y, z]` triples.
    pub fn to_json(&self) -> String {
        let rows: Vec<[f64; 3]> = self.values.iter().map(|v| v.to_array()).collect();
        serde_json::to_string(&rows).expect("finite directors serialize")
    }

    /// Parses [`DirectorField::to_json`] output and validates it against `mesh`.
    pub fn from_json(mesh: &TriMesh, text: &str) -> Result<Self, DirectorError> {
        let rows: Vec<[f64; 3]> = serde_json::from_str(text)?;
        Self::new(mesh, rows.into_iter().map(Vec3::from_array).collect())
    }
}

/// Face-wise director quantities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FaceDirectorData {
    /// Normalized average of the three vertex directors.
    pub theta_bar: Vec3,
    /// Gradient of the linear interpolant, acting on tangent vectors.
    pub dtheta: Mat3,
    /// Symmetric extension with `L θ̄ = 0`.
    pub l: Mat3,
    /// `|L_p − L_pᵀ|` of the projected extension before symmetrization.
    pub asymmetry: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// `(v₁, v₂, θ̄)` is a right-handed orthonormal eigenframe of `L`.
    pub v1: Vec3,
    pub v2: Vec3,
}

impl FaceDirectorData {
    /// Eigen-data of a symmetric `l` with kernel vector `theta` (unit).
    ///
    /// `dtheta` is set to `l` and `asymmetry` to zero.
    pub fn from_symmetric(theta: Vec3, l: Mat3) -> Self {
        let (lambda1, lambda2, v1, v2) = kernel_eigen(theta, &l);
        Self { theta_bar: theta, dtheta: l, l, asymmetry: 0.0, lambda1, lambda2, v1, v2 }
    }

    /// `H = tr L`.
    pub fn mean_curvature(&self) -> f64 {
        self.l.trace()
    }

    /// `K = tr cof L`.
    pub fn gauss_curvature(&self) -> f64 {
        self.l.trace_cofactor()
    }
}

/// Orthonormal basis of `t⊥` that depends on `t` alone.
pub(crate) fn complement_basis(t: Vec3) -> (Vec3, Vec3) {
    let abs = [t.x.abs(), t.y.abs(), t.z.abs()];
    let k = if abs[0] <= abs[1] && abs[0] <= abs[2] {
        0
    } else if abs[1] <= abs[2] {
        1
    } else {
        2
    };
    let a = t.cross(Vec3::axis(k)).normalized();
    (a, t.cross(a))
}

/// Nontrivial eigenpairs of a symmetric `l` restricted to `t⊥`, descending,
/// with `(v₁, v₂, t)` right-handed.
fn kernel_eigen(t: Vec3, l: &Mat3) -> (f64, f64, Vec3, Vec3) {
    let (a, b) = complement_basis(t);
    let la = l.mul_vec(a);
    let lb = l.mul_vec(b);
    let (l1, l2, (c, s)) = sym2_eigen(a.dot(la), 0.5 * (a.dot(lb) + b.dot(la)), b.dot(lb));
    let v1 = a * c + b * s;
    let v2 = a * (-s) + b * c;
    // (a, b, t) is right-handed by construction, and so is (v₁, v₂, t).
    (l1, l2, v1, v2)
}

/// Face data from explicit geometry; the frame only fixes coordinates.
pub fn face_director_data_in_frame(
    frame: &FaceFrame,
    positions: [Vec3; 3],
    thetas: [Vec3; 3],
) -> Result<FaceDirectorData, f64> {
    let theta_bar = (thetas[0] + thetas[1] + thetas[2]).normalized();
    let d = theta_bar.dot(frame.nu);
    if !(d > 0.0) {
        return Err(d);
    }
    let (t1, t2) = (frame.tau1, frame.tau2);
    let e1 = positions[1] - positions[0];
    let e2 = positions[2] - positions[0];
    let (a1, b1, a2, b2) = (e1.dot(t1), e1.dot(t2), e2.dot(t1), e2.dot(t2));
    let det = a1 * b2 - a2 * b1;
    let dt1 = thetas[1] - thetas[0];
    let dt2 = thetas[2] - thetas[0];
    // Dθ τ₁ = c1, Dθ τ₂ = c2 from Dθ e_k = Δθ_k.
    let c1 = (dt1 * b2 - dt2 * b1) * (1.0 / det);
    let c2 = (dt2 * a1 - dt1 * a2) * (1.0 / det);
    let dtheta = c1.outer(t1) + c2.outer(t2);

    // L v = Dθ t where v = t + sθ̄ with t tangent.
    let r1 = t2.cross(theta_bar) * (1.0 / d);
    let r2 = theta_bar.cross(t1) * (1.0 / d);
    let l_raw = c1.outer(r1) + c2.outer(r2);
    let l_proj = complement_projector(theta_bar) * l_raw;
    let asymmetry = (l_proj - l_proj.transpose()).norm();
    let l = l_proj.symmetric_part();
    let (lambda1, lambda2, v1, v2) = kernel_eigen(theta_bar, &l);
    Ok(FaceDirectorData { theta_bar, dtheta, l, asymmetry, lambda1, lambda2, v1, v2 })
}

/// Face data in the default frame of `face`.
pub fn face_director_data(
    mesh: &TriMesh,
    field: &DirectorField,
    face: usize,
) -> Result<FaceDirectorData, DirectorError> {
    let frame = face_frame(mesh, face)?;
    face_data_with_frame(mesh, field, face, &frame)
}

pub(crate) fn face_data_with_frame(
    mesh: &TriMesh,
    field: &DirectorField,
    face: usize,
    frame: &FaceFrame,
) -> Result<FaceDirectorData, DirectorError> {
    if field.len() != mesh.num_vertices() {
        return Err(DirectorError::LengthMismatch { expected: mesh.num_vertices(), found: field.len() });
    }
    let vertices = mesh.faces()[face];
    let thetas = vertices.map(|v| field.values[v]);
    face_director_data_in_frame(frame, mesh.face_positions(face), thetas)
        .map_err(|dot| DirectorError::FaceFoldOver { face, vertices, dot })
}

/// Frames and director data for every face, in face order.
pub fn all_face_data(
    mesh: &TriMesh,
    field: &DirectorField,
) -> Result<Vec<(FaceFrame, FaceDirectorData)>, DirectorError> {
    (0..mesh.num_faces())
        .into_par_iter()
        .map(|f| {
            let frame = face_frame(mesh, f)?;
            Ok((frame, face_data_with_frame(mesh, field, f, &frame)?))
        })
        .collect()
}
