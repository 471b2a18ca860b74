use std::fmt;
use std::str::FromStr;

use super::{DirectorError, DirectorField};
use crate::mesh::{vertex_normals, TriMesh};
use crate::multilinear::Vec3;

/// Ambient vector fields whose tangential projections drive the tilt.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TangentField {
    Zero,
    E1,
    E2,
    E3,
    /// `e₃ × x`, tangent to every surface of revolution about the z-axis.
    Swirl,
}

impl TangentField {
    pub const ALL: [TangentField; 5] =
        [TangentField::Zero, TangentField::E1, TangentField::E2, TangentField::E3, TangentField::Swirl];

    pub fn name(self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::E1 => "e1",
            Self::E2 => "e2",
            Self::E3 => "e3",
            Self::Swirl => "swirl",
        }
    }

    /// Ambient value at `p` before projection.
    pub fn ambient(self, p: Vec3) -> Vec3 {
        match self {
            Self::Zero => Vec3::ZERO,
            Self::E1 => Vec3::E1,
            Self::E2 => Vec3::E2,
            Self::E3 => Vec3::E3,
            Self::Swirl => Vec3::E3.cross(p),
        }
    }

    /// Tangential projection against angle-weighted vertex normals.
    pub fn sample(self, mesh: &TriMesh) -> Vec<Vec3> {
        let normals = vertex_normals(mesh);
        self.sample_with_normals(mesh, &normals)
    }

    pub(crate) fn sample_with_normals(self, mesh: &TriMesh, normals: &[Vec3]) -> Vec<Vec3> {
        mesh.vertices().iter().zip(normals).map(|(&p, &n)| self.ambient(p).reject(n)).collect()
    }
}

impl fmt::Display for TangentField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TangentField {
    type Err = DirectorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s.trim())
            .ok_or_else(|| DirectorError::UnknownField(s.to_string()))
    }
}

/// `θᵥ = νᵥ`, the normalized angle-weighted vertex normal.
pub fn make_normal_director(mesh: &TriMesh) -> DirectorField {
    let normals = vertex_normals(mesh);
    DirectorField { values: normals.iter().map(|n| n.normalized()).collect() }
}

/// `θᵥ = (νᵥ + ε wᵥ)/|νᵥ + ε wᵥ|` with `w` first projected onto the tangent planes.
///
/// Fails if any vertex or face director points to the inner side.
pub fn make_tilted_director(mesh: &TriMesh, w: &[Vec3], eps: f64) -> Result<DirectorField, DirectorError> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(DirectorError::BadEpsilon(eps));
    }
    let normals = vertex_normals(mesh);
    if w.len() != normals.len() {
        return Err(DirectorError::LengthMismatch { expected: normals.len(), found: w.len() });
    }
    let values = tilt_values(&normals, w, eps);
    let field = DirectorField::with_normals(&normals, values)?;
    if let Some(&(face, dot)) = fold_over_faces(mesh, &field.values).first() {
        return Err(DirectorError::FaceFoldOver { face, vertices: mesh.faces()[face], dot });
    }
    Ok(field)
}

fn tilt_values(normals: &[Vec3], w: &[Vec3], eps: f64) -> Vec<Vec3> {
    normals.iter().zip(w).map(|(&n, &wv)| (n + wv.reject(n) * eps).normalized()).collect()
}

/// The tilted values without any fold-over check.
pub fn tilted_values_unchecked(mesh: &TriMesh, w: &[Vec3], eps: f64) -> Vec<Vec3> {
    tilt_values(&vertex_normals(mesh), w, eps)
}

/// Faces whose averaged director has `θ̄·ν ≤ 0`, with that dot product.
pub fn fold_over_faces(mesh: &TriMesh, values: &[Vec3]) -> Vec<(usize, f64)> {
    mesh.faces()
        .iter()
        .enumerate()
        .filter_map(|(face, vertices)| {
            let bar = vertices.iter().fold(Vec3::ZERO, |acc, &v| acc + values[v]).normalized();
            let dot = bar.dot(mesh.face_normal(face));
            (!(dot > 0.0)).then_some((face, dot))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_primitive, PrimitiveSpec};

    fn sphere(level: u32) -> TriMesh {
        generate_primitive(PrimitiveSpec::Sphere { radius: 1.0, level }).unwrap()
    }

    #[test]
    fn zero_tilt_reproduces_normal_director() {
        let m = sphere(2);
        let w = TangentField::E1.sample(&m);
        assert_eq!(make_tilted_director(&m, &w, 0.0).unwrap(), make_normal_director(&m));
    }

    #[test]
    fn normal_director_matches_radial_direction() {
        let errs: Vec<f64> = [2, 3, 4]
            .iter()
            .map(|&l| {
                let m = sphere(l);
                let d = make_normal_director(&m);
                m.vertices()
                    .iter()
                    .zip(d.values())
                    .map(|(p, t)| p.normalized().cross(*t).norm())
                    .fold(0.0, f64::max)
            })
            .collect();
        // Irregular icosphere stencils limit the angle-weighted normal to first order.
        assert!(errs[0] < 2e-2, "{errs:?}");
        assert!(errs.windows(2).all(|w| w[1] < 0.6 * w[0]), "{errs:?}");
    }

    #[test]
    fn tilt_deviation_follows_taylor_expansion() {
        let m = sphere(3);
        let eps = 0.1;
        let field = make_tilted_director(&m, &TangentField::E1.sample(&m), eps).unwrap();
        let normals = vertex_normals(&m);
        let worst = field.values().iter().zip(&normals).map(|(t, n)| 1.0 - t.dot(*n)).fold(0.0, f64::max);
        // 1 − 1/√(1+ε²|w|²) ≤ ε²/2 for |w| ≤ 1.
        assert!(worst <= eps * eps / 2.0 + 1e-12, "{worst}");
        assert!(worst > 0.9 * eps * eps / 2.0 - eps.powi(4), "{worst}");
    }

    #[test]
    fn tetrahedron_normal_director_points_outward() {
        let v = vec![
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(1.0, -1.0, -1.0),
            Vec3::new(-1.0, 1.0, -1.0),
            Vec3::new(-1.0, -1.0, 1.0),
        ];
        let m = TriMesh::new(v, vec![[0, 1, 2], [0, 2, 3], [0, 3, 1], [1, 3, 2]], None).unwrap();
        let d = make_normal_director(&m);
        for (p, t) in m.vertices().iter().zip(d.values()) {
            assert!(p.dot(*t) > 0.0);
        }
        for f in 0..4 {
            let n = m.face_normal(f);
            assert!(m.faces()[f].iter().all(|&v| d.values()[v].dot(n) > 0.0));
        }
    }

    #[test]
    fn extreme_tilt_folds_over() {
        let m = sphere(2);
        let err = make_tilted_director(&m, &TangentField::Swirl.sample(&m), 1e8).unwrap_err();
        assert!(matches!(err, DirectorError::FaceFoldOver { .. }), "{err}");
        assert!(matches!(make_tilted_director(&m, &[], 0.1), Err(DirectorError::LengthMismatch { .. })));
        assert!(matches!(
            make_tilted_director(&m, &TangentField::E1.sample(&m), -1.0),
            Err(DirectorError::BadEpsilon(_))
        ));
    }

    #[test]
    fn catalog_names_round_trip() {
        for f in TangentField::ALL {
            assert_eq!(f.name().parse::<TangentField>().unwrap(), f);
        }
        assert!("curl".parse::<TangentField>().is_err());
    }
}
