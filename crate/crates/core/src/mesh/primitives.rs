//! Icospheres and parametric tori with exact-geometry refinement.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{AnalyticTag, MeshError, TriMesh};
use crate::multilinear::Vec3;

/// Parameters of a generated surface.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PrimitiveSpec {
    Sphere { radius: f64, level: u32 },
    Torus { major_radius: f64, minor_radius: f64, nu: usize, nv: usize },
}

/// Largest subdivision level accepted (20·4¹⁰ ≈ 2·10⁷ faces).
const MAX_SPHERE_LEVEL: u32 = 10;

pub fn generate_primitive(spec: PrimitiveSpec) -> Result<TriMesh, MeshError> {
    match spec {
        PrimitiveSpec::Sphere { radius, level } => icosphere(radius, level),
        PrimitiveSpec::Torus { major_radius, minor_radius, nu, nv } => {
            torus(major_radius, minor_radius, nu, nv)
        }
    }
}

/// Next refinement of a tagged mesh, resampled on the exact surface.
pub fn refine(mesh: &TriMesh) -> Result<TriMesh, MeshError> {
    match mesh.tag() {
        Some(AnalyticTag::Sphere { radius, level }) => icosphere(radius, level + 1),
        Some(AnalyticTag::Torus { major_radius, minor_radius, nu, nv }) => {
            torus(major_radius, minor_radius, 2 * nu, 2 * nv)
        }
        None => Err(MeshError::Untagged),
    }
}

fn icosphere(radius: f64, level: u32) -> Result<TriMesh, MeshError> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(MeshError::Parameter(format!("sphere radius must be positive and finite, got {radius}")));
    }
    if level > MAX_SPHERE_LEVEL {
        return Err(MeshError::Parameter(format!("sphere level must be at most {MAX_SPHERE_LEVEL}, got {level}")));
    }
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, t, 0.0), (1.0, t, 0.0), (-1.0, -t, 0.0), (1.0, -t, 0.0),
        (0.0, -1.0, t), (0.0, 1.0, t), (0.0, -1.0, -t), (0.0, 1.0, -t),
        (t, 0.0, -1.0), (t, 0.0, 1.0), (-t, 0.0, -1.0), (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalized())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];

    for _ in 0..level {
        let mut cache: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3 / 2);
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) * 0.5).normalized());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }

    let verts = verts.into_iter().map(|p| p * radius).collect();
    TriMesh::new(verts, faces, Some(AnalyticTag::Sphere { radius, level }))
}

fn torus(major: f64, minor: f64, nu: usize, nv: usize) -> Result<TriMesh, MeshError> {
    if !(minor > 0.0 && major > minor && major.is_finite()) {
        return Err(MeshError::Parameter(format!(
            "torus radii must satisfy R > r > 0, got R = {major}, r = {minor}"
        )));
    }
    if nu < 3 || nv < 3 {
        return Err(MeshError::Parameter(format!("torus grid must be at least 3x3, got {nu}x{nv}")));
    }
    let tau = std::f64::consts::TAU;
    let mut verts = Vec::with_capacity(nu * nv);
    for i in 0..nu {
        let (su, cu) = (tau * i as f64 / nu as f64).sin_cos();
        for j in 0..nv {
            let (sv, cv) = (tau * j as f64 / nv as f64).sin_cos();
            let rho = major + minor * cv;
            verts.push(Vec3::new(rho * cu, rho * su, minor * sv));
        }
    }
    let id = |i: usize, j: usize| (i % nu) * nv + (j % nv);
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for i in 0..nu {
        for j in 0..nv {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::new(
        verts,
        faces,
        Some(AnalyticTag::Torus { major_radius: major, minor_radius: minor, nu, nv }),
    )
}
