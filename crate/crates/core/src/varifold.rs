//! Curvature-varifold quantities: the tensor `A_ijk`, the generalized `H` and
//! `K`, the graph-side formulas at multiplicity one, and a discrete
//! first-variation residual under refinement.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::director::{all_face_data, make_normal_director, DirectorError};
use crate::fit::{loglog_order, OrderFit};
use crate::mesh::TriMesh;
use crate::multilinear::{Bivector3, Mat3, Vec3};
use crate::reduce::det_sum;

/// Precondition tolerance for [`second_fundamental_a`].
pub const PRECONDITION_TOLERANCE: f64 = 1e-8;
/// Residuals at or below this are treated as exact zeros in order fits.
pub const RESIDUAL_FLOOR: f64 = 1e-12;
/// Minimum fitted order for the first-variation study.
pub const MIN_ORDER: f64 = 0.8;

#[derive(Debug, Error)]
pub enum VarifoldError {
    #[error("precondition `{name}` violated: residual {residual:e}")]
    Precondition { name: &'static str, residual: f64 },
    #[error(transparent)]
    Director(#[from] DirectorError),
}

/// `A_ijk`, symmetric in `(j, k)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct CurvatureTensorA {
    pub a: [[[f64; 3]; 3]; 3],
}

impl CurvatureTensorA {
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.a[i][j][k]
    }

    /// `(A_ijk)_{ij}` for fixed `k`.
    pub fn slice_k(&self, k: usize) -> Mat3 {
        Mat3(std::array::from_fn(|i| std::array::from_fn(|j| self.a[i][j][k])))
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().flatten().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sub(&self, o: &Self) -> Self {
        let mut out = *self;
        out.a.iter_mut().flatten().flatten().zip(o.a.iter().flatten().flatten()).for_each(|(x, y)| *x -= y);
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        out.a.iter_mut().flatten().flatten().for_each(|x| *x *= s);
        out
    }

    /// `max |A_ijk − A_ikj|`.
    pub fn symmetry_defect(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    m = m.max((self.a[i][j][k] - self.a[i][k][j]).abs());
                }
            }
        }
        m
    }
}

fn tensor_from(f: impl Fn(usize, usize, usize) -> f64) -> CurvatureTensorA {
    CurvatureTensorA { a: std::array::from_fn(|i| std::array::from_fn(|j| std::array::from_fn(|k| f(i, j, k)))) }
}

/// `A_ijk = L_ij ν_k + L_ik ν_j` without checking the preconditions.
pub fn second_fundamental_a_unchecked(l: &Mat3, nu: Vec3) -> CurvatureTensorA {
    tensor_from(|i, j, k| l[(i, j)] * nu[k] + l[(i, k)] * nu[j])
}

/// `A_ijk = L_ij ν_k + L_ik ν_j` for symmetric `L` with `Lν = 0`.
pub fn second_fundamental_a(l: &Mat3, nu: Vec3) -> Result<CurvatureTensorA, VarifoldError> {
    let scale = 1f64.max(l.norm());
    let sym = (*l - l.transpose()).norm() / scale;
    if !(sym <= PRECONDITION_TOLERANCE) {
        return Err(VarifoldError::Precondition { name: "L symmetric", residual: sym });
    }
    let ker = l.mul_vec(nu).norm() / scale;
    if !(ker <= PRECONDITION_TOLERANCE) {
        return Err(VarifoldError::Precondition { name: "L nu = 0", residual: ker });
    }
    Ok(second_fundamental_a_unchecked(l, nu))
}

/// `(H, K) = (Σ_ij A_iji ν_j, Σ_k tr cof (A_ijk)_{ij})`.
pub fn hk_from_a(a: &CurvatureTensorA, nu: Vec3) -> (f64, f64) {
    let mut h = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            h += a.get(i, j, i) * nu[j];
        }
    }
    let k = (0..3).map(|k| a.slice_k(k).trace_cofactor()).sum();
    (h, k)
}

/// `H_j = Σ_i A_iji`.
pub fn mean_curvature_vector(a: &CurvatureTensorA) -> Vec3 {
    Vec3::from_array(std::array::from_fn(|j| (0..3).map(|i| a.get(i, j, i)).sum()))
}

/// `ξ̄₁ = (β(x,y) ξ₁(x,y) + β(x,−y) ξ₁(x,−y)) / γ`.
pub fn averaged_xi1(beta_plus: f64, xi1_plus: &Mat3, beta_minus: f64, xi1_minus: &Mat3, gamma: f64) -> Mat3 {
    (xi1_plus.scale(beta_plus) + xi1_minus.scale(beta_minus)).scale(1.0 / gamma)
}

/// `A_ijk = Σ_r ξ₀^{ir}(ξ̄₁^{rj} y_k + ξ̄₁^{rk} y_j)` and
/// `H_j = Σ_{i,r} ξ₀^{ir} ξ̄₁^{ri} y_j`.
pub fn varifold_a_from_graph(xi0: &Bivector3, xi1_bar: &Mat3, y: Vec3) -> (CurvatureTensorA, Vec3) {
    let m = xi0.to_matrix() * *xi1_bar;
    let a = tensor_from(|i, j, k| m[(i, j)] * y[k] + m[(i, k)] * y[j]);
    let h = y * m.trace();
    (a, h)
}

/// Test function `φ(x, P)` with its derivatives in `x` and in the entries of `P`.
#[derive(Clone, Copy)]
pub struct TestFunction {
    pub id: &'static str,
    pub value: fn(Vec3, &Mat3) -> f64,
    pub grad_x: fn(Vec3, &Mat3) -> Vec3,
    pub grad_p: fn(Vec3, &Mat3) -> Mat3,
}

impl std::fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id)
    }
}

fn unit(i: usize, j: usize) -> Mat3 {
    let mut m = Mat3::ZERO;
    m[(i, j)] = 1.0;
    m
}

/// Version tag of [`catalog`].
pub const CATALOG_VERSION: &str = "v1";

/// Fixed test-function catalog.
pub fn catalog() -> Vec<TestFunction> {
    vec![
        TestFunction { id: "one", value: |_, _| 1.0, grad_x: |_, _| Vec3::ZERO, grad_p: |_, _| Mat3::ZERO },
        TestFunction { id: "x1", value: |x, _| x.x, grad_x: |_, _| Vec3::E1, grad_p: |_, _| Mat3::ZERO },
        TestFunction {
            id: "x2+x3^2",
            value: |x, _| x.y + x.z * x.z,
            grad_x: |x, _| Vec3::new(0.0, 1.0, 2.0 * x.z),
            grad_p: |_, _| Mat3::ZERO,
        },
        TestFunction { id: "P11", value: |_, p| p[(0, 0)], grad_x: |_, _| Vec3::ZERO, grad_p: |_, _| unit(0, 0) },
        TestFunction {
            id: "x1*P11",
            value: |x, p| x.x * p[(0, 0)],
            grad_x: |_, p| Vec3::new(p[(0, 0)], 0.0, 0.0),
            grad_p: |x, _| unit(0, 0).scale(x.x),
        },
        TestFunction {
            id: "x3*P12",
            value: |x, p| x.z * p[(0, 1)],
            grad_x: |_, p| Vec3::new(0.0, 0.0, p[(0, 1)]),
            grad_p: |x, _| unit(0, 1).scale(x.z),
        },
    ]
}

/// Integrand `δᵢφ + Σ_jk A_ijk ∂*_jk φ + Σ_j A_jij φ` at one point.
pub fn first_variation_integrand(phi: &TestFunction, x: Vec3, p: &Mat3, a: &CurvatureTensorA) -> Vec3 {
    let v = (phi.value)(x, p);
    let gx = (phi.grad_x)(x, p);
    let gp = (phi.grad_p)(x, p);
    let delta = p.mul_vec(gx);
    Vec3::from_array(std::array::from_fn(|i| {
        let mut s = delta[i];
        for j in 0..3 {
            for k in 0..3 {
                s += a.get(i, j, k) * gp[(j, k)];
            }
            s += a.get(j, i, j) * v;
        }
        s
    }))
}

/// Per-face `(centroid, P, δP, area)` for the normal director, with
/// `P = I − θ̄θ̄ᵀ` and `δᵢP_jk = −(L_ij θ̄_k + L_ik θ̄_j)`.
fn face_geometry(mesh: &TriMesh) -> Result<Vec<(Vec3, Mat3, CurvatureTensorA, f64)>, VarifoldError> {
    let data = all_face_data(mesh, &make_normal_director(mesh))?;
    Ok(data
        .par_iter()
        .enumerate()
        .map(|(f, (fr, d))| {
            let n = d.theta_bar;
            let p = Mat3::IDENTITY - n.outer(n);
            (mesh.face_centroid(f), p, second_fundamental_a_unchecked(&d.l, n).scale(-1.0), fr.area)
        })
        .collect())
}

/// `Σ_f area_f · integrand(centroid_f)` for every catalog entry.
pub fn first_variation_residual(mesh: &TriMesh, fns: &[TestFunction]) -> Result<Vec<(&'static str, Vec3)>, VarifoldError> {
    let geo = face_geometry(mesh)?;
    Ok(fns
        .iter()
        .map(|phi| {
            let per: Vec<Vec3> = geo.iter().map(|(x, p, a, area)| first_variation_integrand(phi, *x, p, a) * *area).collect();
            let r = Vec3::from_array(std::array::from_fn(|i| det_sum(&per.iter().map(|v| v[i]).collect::<Vec<_>>())));
            (phi.id, r)
        })
        .collect())
}

/// Mean edge length.
pub fn mesh_size(mesh: &TriMesh) -> f64 {
    let v = mesh.vertices();
    let lens: Vec<f64> = mesh.edges().iter().map(|&(a, b)| (v[a] - v[b]).norm()).collect();
    det_sum(&lens) / lens.len() as f64
}

/// One (test function, mesh) cell of the refinement study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FirstVariationRow {
    pub id: &'static str,
    pub level: u32,
    pub h: f64,
    pub residual: [f64; 3],
    pub norm: f64,
}

/// Order fit of one test function across levels.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FirstVariationFit {
    pub id: &'static str,
    pub fit: Option<OrderFit>,
    pub max_residual: f64,
    /// `order ≥ MIN_ORDER`, or every residual at the machine-zero floor.
    pub pass: bool,
}

/// Residual table and per-function fits; the coarsest mesh is dropped from fits.
pub fn first_variation_study(
    meshes: &[(u32, TriMesh)],
    fns: &[TestFunction],
) -> Result<(Vec<FirstVariationRow>, Vec<FirstVariationFit>), VarifoldError> {
    let mut rows = Vec::new();
    for (level, mesh) in meshes {
        let h = mesh_size(mesh);
        for (id, r) in first_variation_residual(mesh, fns)? {
            rows.push(FirstVariationRow { id, level: *level, h, residual: r.to_array(), norm: r.norm() });
        }
    }
    let fits = fns
        .iter()
        .map(|phi| {
            let mine: Vec<&FirstVariationRow> = rows.iter().filter(|r| r.id == phi.id).collect();
            let used = &mine[1.min(mine.len())..];
            let hs: Vec<f64> = used.iter().map(|r| r.h).collect();
            let ns: Vec<f64> = used.iter().map(|r| r.norm).collect();
            let max_residual = mine.iter().map(|r| r.norm).fold(0.0, f64::max);
            let fit = loglog_order(&hs, &ns);
            let at_floor = used.iter().all(|r| r.norm <= RESIDUAL_FLOOR);
            let pass = at_floor || fit.is_some_and(|f| f.order >= MIN_ORDER);
            FirstVariationFit { id: phi.id, fit, max_residual, pass }
        })
        .collect();
    Ok((rows, fits))
}

/// `max_f |A_graph + A_L|_∞` over faces for the normal director, where
/// `A_graph` uses `(ξ₀, ξ₁, ν)` of the face and `A_L` uses `(L, θ̄)`.
pub fn graph_l_discrepancy(mesh: &TriMesh) -> Result<f64, VarifoldError> {
    let data = all_face_data(mesh, &make_normal_director(mesh))?;
    Ok(data
        .par_iter()
        .map(|(fr, d)| {
            let xi = crate::gauss_graph::raw_xi(fr, d);
            let (ag, _) = varifold_a_from_graph(&xi.part0, &xi.part1, fr.nu);
            let al = second_fundamental_a_unchecked(&d.l, d.theta_bar);
            ag.sub(&al.scale(-1.0)).max_abs()
        })
        .reduce(|| 0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::director::FaceDirectorData;
    use crate::mesh::{generate_primitive, PrimitiveSpec};
    use crate::multilinear::hodge_star;

    #[test]
    fn north_pole_tensor() {
        let a = second_fundamental_a(&Mat3::diag(1.0, 1.0, 0.0), Vec3::E3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    let want = match (i, j, k) {
                        (0, 0, 2) | (0, 2, 0) | (1, 1, 2) | (1, 2, 1) => 1.0,
                        _ => 0.0,
                    };
                    assert_eq!(a.get(i, j, k), want, "A_{}{}{}", i + 1, j + 1, k + 1);
                }
            }
        }
        assert_eq!(hk_from_a(&a, Vec3::E3), (2.0, 1.0));
        assert_eq!(hk_from_a(&CurvatureTensorA::default(), Vec3::E3), (0.0, 0.0));
        assert_eq!(second_fundamental_a(&Mat3::ZERO, Vec3::E1).unwrap(), CurvatureTensorA::default());
    }

    #[test]
    fn preconditions_are_reported() {
        let bad = Mat3([[1.0, 0.5, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]);
        assert!(matches!(second_fundamental_a(&bad, Vec3::E3), Err(VarifoldError::Precondition { .. })));
        assert!(matches!(
            second_fundamental_a(&Mat3::diag(1.0, 1.0, 1.0), Vec3::E3),
            Err(VarifoldError::Precondition { name: "L nu = 0", .. })
        ));
    }

    #[test]
    fn graph_formula_at_north_pole() {
        let d = FaceDirectorData::from_symmetric(Vec3::E3, Mat3::diag(1.0, 1.0, 0.0));
        let xi1 = Vec3::E1.outer(d.l.mul_vec(Vec3::E2)) - Vec3::E2.outer(d.l.mul_vec(Vec3::E1));
        let (ag, h) = varifold_a_from_graph(&hodge_star(Vec3::E3), &xi1, Vec3::E3);
        let al = second_fundamental_a(&d.l, Vec3::E3).unwrap();
        assert_eq!(ag, al.scale(-1.0));
        assert_eq!(h, Vec3::new(0.0, 0.0, -2.0));
        assert_eq!(mean_curvature_vector(&ag), h);
        let (a_neg, h_neg) = varifold_a_from_graph(&hodge_star(-Vec3::E3), &xi1, -Vec3::E3);
        assert_eq!((a_neg, h_neg), (ag, h));
        let (z, hz) = varifold_a_from_graph(&hodge_star(Vec3::E3), &Mat3::ZERO, Vec3::E3);
        assert_eq!((z.max_abs(), hz), (0.0, Vec3::ZERO));
        assert_eq!(averaged_xi1(1.0, &xi1, 0.0, &Mat3::ZERO, 1.0), xi1);
    }

    #[test]
    fn graph_and_l_tensors_converge_on_the_sphere() {
        let errs: Vec<f64> = [2, 3, 4, 5]
            .iter()
            .map(|&level| graph_l_discrepancy(&generate_primitive(PrimitiveSpec::Sphere { radius: 1.0, level }).unwrap()).unwrap())
            .collect();
        let hs: Vec<f64> = errs.iter().enumerate().map(|(n, _)| 0.5f64.powi(n as i32)).collect();
        let fit = loglog_order(&hs[1..], &errs[1..]).unwrap();
        assert!(fit.order >= MIN_ORDER, "{errs:?} {fit:?}");
    }

    #[test]
    fn first_variation_decays_on_the_sphere() {
        let meshes: Vec<(u32, TriMesh)> = (2..=5)
            .map(|l| (l, generate_primitive(PrimitiveSpec::Sphere { radius: 1.0, level: l }).unwrap()))
            .collect();
        let (rows, fits) = first_variation_study(&meshes, &catalog()).unwrap();
        assert_eq!(rows.len(), 4 * catalog().len());
        for f in &fits {
            assert!(f.pass, "{f:?}");
        }
    }
}
