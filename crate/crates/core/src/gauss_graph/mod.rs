//! Per-face Gauss-graph 2-vectors and the quantities built from them.
//!
//! On the graph side the derivative of the director acting on the face frame
//! is taken as `Dθτ := Lτ`, so that `ξ` only sees the symmetric extension.

pub mod forms;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub use forms::{FormParseError, OneForm6, Poly6, TestForms};

use crate::director::{all_face_data, DirectorError, DirectorField, FaceDirectorData};
use crate::energy::bending_energy;
use crate::mesh::{FaceFrame, TriMesh};
use crate::multilinear::{
    hodge_star, levi_civita, lambda2_r6_pairs, relative_residual, wedge3, wedge6, Bivector3, Mat3,
    MultilinearError, NamedResidual, TwoVector6, Vec3, Vec6, UNIT_TOLERANCE,
};
use crate::reduce::det_sum;

/// Tolerance on the closed forms of `ξ`; exceeding it is a bug.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-10;
/// Faces with `θ̄·ν` below this are left out of graph-side integrals.
pub const MIN_THETA_DOT_NU: f64 = 0.05;
/// Faces with `|η₀|` below this are left out of graph-side integrals.
pub const MIN_ETA0: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("internal consistency failure: `{name}` residual {residual:e} exceeds {CLOSED_FORM_TOLERANCE:e}")]
    ClosedForm { name: &'static str, residual: f64 },
    #[error(transparent)]
    NotUnit(#[from] MultilinearError),
    #[error(transparent)]
    Director(#[from] DirectorError),
}

/// `⟨Ψ_θ, ζ⟩ = Σ ε_ikl θ_i ζ^{kl}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsiForm {
    pub theta: Vec3,
}

impl PsiForm {
    pub fn new(theta: Vec3) -> Self {
        Self { theta }
    }

    pub fn pair(&self, zeta: &Mat3) -> f64 {
        let t = self.theta.to_array();
        let mut s = 0.0;
        for (i, ti) in t.iter().enumerate() {
            for k in 0..3 {
                for l in 0..3 {
                    s += levi_civita(i, k, l) * ti * zeta[(k, l)];
                }
            }
        }
        s
    }

    /// Same pairing written out through the antisymmetric part of `ζ`.
    pub fn pair_explicit(&self, z: &Mat3) -> f64 {
        let t = self.theta;
        t.x * (z[(1, 2)] - z[(2, 1)]) - t.y * (z[(0, 2)] - z[(2, 0)]) + t.z * (z[(0, 1)] - z[(1, 0)])
    }
}

/// Graph 2-vector of one face and its scalar diagnostics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GraphFaceData {
    pub xi: TwoVector6,
    /// `|ξ|`, the Jacobian of `p ↦ (p, θ(p))`.
    pub jac: f64,
    /// `f_θ̄(ξ₁) = (θ̄·ν)² Q(L)`.
    pub f_y_value: f64,
    pub theta_dot_nu: f64,
    /// `|θ̄ᵀ ξ₁|`.
    pub defect: f64,
}

/// Row of the per-face CSV dump.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GraphFaceRow {
    pub face: usize,
    pub jac: f64,
    pub theta_dot_nu: f64,
    pub f_y_value: f64,
    pub defect: f64,
}

fn matrix_residual(name: &'static str, a: &Mat3, b: &Mat3) -> NamedResidual {
    let (na, nb) = (a.norm(), b.norm());
    NamedResidual { name, lhs: na, rhs: nb, residual: (*a - *b).norm() / 1f64.max(na).max(nb) }
}

fn bivector_residual(name: &'static str, a: &Bivector3, b: &Bivector3) -> NamedResidual {
    let (na, nb) = (a.norm(), b.norm());
    NamedResidual { name, lhs: na, rhs: nb, residual: a.sub(b).norm() / 1f64.max(na).max(nb) }
}

/// `ξ = (τ₁, Lτ₁) ∧ (τ₂, Lτ₂)`.
pub fn raw_xi(frame: &FaceFrame, data: &FaceDirectorData) -> TwoVector6 {
    let (t1, t2) = (frame.tau1, frame.tau2);
    wedge6(Vec6::new(t1, data.l.mul_vec(t1)), Vec6::new(t2, data.l.mul_vec(t2)))
}

/// `|ξ|²` through the eigenframe of `L`:
/// `1 + λ₁²(1−(v₁·ν)²) + λ₂²(1−(v₂·ν)²) + λ₁²λ₂²(θ̄·ν)²`.
pub fn jac_squared_eigen(frame: &FaceFrame, data: &FaceDirectorData) -> f64 {
    let (l1, l2) = (data.lambda1, data.lambda2);
    let c = data.theta_bar.dot(frame.nu);
    1.0 + l1 * l1 * (1.0 - data.v1.dot(frame.nu).powi(2))
        + l2 * l2 * (1.0 - data.v2.dot(frame.nu).powi(2))
        + (l1 * l2 * c).powi(2)
}

/// Closed forms of the strata of `ξ` and of its norm, each against an
/// independent route through the eigenframe of `L`.
pub fn closed_form_residuals(frame: &FaceFrame, data: &FaceDirectorData) -> Vec<NamedResidual> {
    let xi = raw_xi(frame, data);
    let (t1, t2, nu) = (frame.tau1, frame.tau2, frame.nu);
    let theta = data.theta_bar;
    let c = theta.dot(nu);
    let eig = [(data.lambda1, data.v1), (data.lambda2, data.v2)];

    // ξ₁ = Σ_k λ_k [(v_k·τ₂) τ₁⊗v_k − (v_k·τ₁) τ₂⊗v_k].
    let xi1_eigen = eig.iter().fold(Mat3::ZERO, |acc, &(l, v)| {
        acc + (t1.outer(v).scale(l * v.dot(t2)) - t2.outer(v).scale(l * v.dot(t1)))
    });
    // ξ₂ = λ₁λ₂ (θ̄·ν) v₁∧v₂ = λ₁λ₂ (θ̄·ν) *θ̄.
    let xi2_eigen = hodge_star(theta).scale(data.lambda1 * data.lambda2 * c);
    let xi1_sq_eigen: f64 = eig.iter().map(|&(l, v)| l * l * (1.0 - v.dot(nu).powi(2))).sum();
    let jac_sq = jac_squared_eigen(frame, data);
    let jac = xi.norm();
    let bound = 1.0 + data.lambda1.powi(2) + data.lambda2.powi(2);

    vec![
        bivector_residual("rep_xi0", &xi.part0, &hodge_star(nu)),
        matrix_residual("rep_xi1", &xi.part1, &xi1_eigen),
        bivector_residual("rep_xi2", &xi.part2, &xi2_eigen),
        NamedResidual::new("rep_xi2_norm", xi.part2.norm(), (data.lambda1 * data.lambda2 * c).abs()),
        NamedResidual::new("xi_jac1_part0", xi.part0.norm_sq(), 1.0),
        NamedResidual::new(
            "xi_jac1_part1",
            xi.part1.norm().powi(2),
            data.l.mul_vec(t1).norm_sq() + data.l.mul_vec(t2).norm_sq(),
        ),
        NamedResidual::new("xi_jac1_part1_eigen", xi.part1.norm().powi(2), xi1_sq_eigen),
        NamedResidual::new("xi_jac2", xi.part2.norm_sq(), (data.lambda1 * data.lambda2 * c).powi(2)),
        NamedResidual::new("xi_jac", jac * jac, xi.part0.norm_sq() + xi.part1.norm().powi(2) + xi.part2.norm_sq()),
        NamedResidual::new("jac1", jac, jac_sq.sqrt()),
        // One-sided bounds 1 ≤ jac ≤ 1 + λ₁² + λ₂²: residual is the violation.
        NamedResidual { name: "jac2_lower", lhs: 1.0, rhs: jac, residual: (1.0 - jac).max(0.0) / jac.max(1.0) },
        NamedResidual { name: "jac2_upper", lhs: jac, rhs: bound, residual: (jac - bound).max(0.0) / bound },
    ]
}

/// Builds `ξ` for one face and checks every closed form.
pub fn graph_xi(frame: &FaceFrame, data: &FaceDirectorData) -> Result<GraphFaceData, GraphError> {
    if let Some(r) = closed_form_residuals(frame, data)
        .into_iter()
        .find(|r| !(r.residual <= CLOSED_FORM_TOLERANCE))
    {
        return Err(GraphError::ClosedForm { name: r.name, residual: r.residual });
    }
    let xi = raw_xi(frame, data);
    let theta = data.theta_bar;
    Ok(GraphFaceData {
        xi,
        jac: xi.norm(),
        f_y_value: f_y(&xi.part1, theta)?,
        theta_dot_nu: theta.dot(frame.nu),
        defect: defect_from_xi1(&xi.part1, theta),
    })
}

/// Trace and cofactor identities linking `L` to `ξ₁`, plus the row and trace
/// conditions that put `ξ₁` in `X_θ̄`.
pub fn xi_trace_identities(frame: &FaceFrame, data: &FaceDirectorData) -> Vec<NamedResidual> {
    let xi1 = raw_xi(frame, data).part1;
    let theta = data.theta_bar;
    let c = theta.dot(frame.nu);
    let psi = PsiForm::new(theta);
    let row = xi1.mul_vec(theta);
    let scale = 1f64.max(xi1.norm());
    let zero = |name, v: f64| NamedResidual { name, lhs: v, rhs: 0.0, residual: v.abs() / scale };
    vec![
        NamedResidual::new("trL_xi", c * data.l.trace(), psi.pair_explicit(&xi1)),
        NamedResidual::new("trL_xi_psi", c * data.l.trace(), psi.pair(&xi1)),
        NamedResidual::new("Q_xi", c * c * data.l.trace_cofactor(), theta.dot(xi1.cofactor().mul_vec(theta))),
        zero("propL1_row1", row.x),
        zero("propL1_row2", row.y),
        zero("propL1_row3", row.z),
        zero("propL1_trace", xi1.trace()),
    ]
}

/// `[ζy, tr ζ]` componentwise; all zero iff `ζ ∈ X_y`.
pub fn membership_residuals(zeta: &Mat3, y: Vec3) -> [f64; 4] {
    let r = zeta.mul_vec(y);
    [r.x, r.y, r.z, zeta.trace()]
}

fn check_unit(y: Vec3) -> Result<(), MultilinearError> {
    let n = y.norm();
    if (n - 1.0).abs() <= UNIT_TOLERANCE {
        Ok(())
    } else {
        Err(MultilinearError::NotUnit { norm: n })
    }
}

/// `f_y(ζ) = ¼⟨Ψ_y, ζ⟩² − ⅙ y·cof(ζ) y`.
pub fn f_y(zeta: &Mat3, y: Vec3) -> Result<f64, MultilinearError> {
    check_unit(y)?;
    let p = PsiForm::new(y).pair(zeta);
    Ok(0.25 * p * p - y.dot(zeta.cofactor().mul_vec(y)) / 6.0)
}

/// Verticality defect `|(θ̄·τ₁)Lτ₂ − (θ̄·τ₂)Lτ₁|`.
pub fn verticality_defect(frame: &FaceFrame, data: &FaceDirectorData) -> f64 {
    let t = data.theta_bar;
    (data.l.mul_vec(frame.tau2) * t.dot(frame.tau1) - data.l.mul_vec(frame.tau1) * t.dot(frame.tau2)).norm()
}

/// `|Σᵢ θᵢ ξ₁^{i·}|`.
pub fn defect_from_xi1(xi1: &Mat3, theta: Vec3) -> f64 {
    xi1.transpose().mul_vec(theta).norm()
}

/// Graph data for every face, in face order.
pub fn graph_faces(mesh: &TriMesh, field: &DirectorField) -> Result<Vec<(FaceFrame, FaceDirectorData, GraphFaceData)>, GraphError> {
    all_face_data(mesh, field)?
        .into_par_iter()
        .map(|(fr, d)| Ok((fr, d, graph_xi(&fr, &d)?)))
        .collect()
}

/// Rows for the per-face CSV dump.
pub fn graph_face_rows(mesh: &TriMesh, field: &DirectorField) -> Result<Vec<GraphFaceRow>, GraphError> {
    Ok(graph_faces(mesh, field)?
        .iter()
        .enumerate()
        .map(|(face, (_, _, g))| GraphFaceRow {
            face,
            jac: g.jac,
            theta_dot_nu: g.theta_dot_nu,
            f_y_value: g.f_y_value,
            defect: g.defect,
        })
        .collect())
}

/// Graph area together with the two bounds that control it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphAreaCertificate {
    pub graph_area: f64,
    pub surface_area: f64,
    pub bending: f64,
    /// `area(S) + 12 ∫ Q(L)`.
    pub area_bound: f64,
    pub area_bound_holds: bool,
    /// Faces with `jac > 1 + λ₁² + λ₂²`.
    pub jac_bound_violations: Vec<usize>,
    /// `max_f jac / (1 + λ₁² + λ₂²)`.
    pub max_jac_ratio: f64,
}

/// `Σ jac · area` with its certificate.
pub fn graph_area(mesh: &TriMesh, field: &DirectorField) -> Result<GraphAreaCertificate, GraphError> {
    let faces = graph_faces(mesh, field)?;
    let weighted: Vec<f64> = faces.iter().map(|(fr, _, g)| g.jac * fr.area).collect();
    let ratios: Vec<f64> = faces
        .iter()
        .map(|(_, d, g)| g.jac / (1.0 + d.lambda1.powi(2) + d.lambda2.powi(2)))
        .collect();
    let graph_area = det_sum(&weighted);
    let surface_area = mesh.total_area();
    let bending = bending_energy(mesh, field).map_err(|e| match e {
        crate::energy::EnergyError::Director(d) => GraphError::Director(d),
        other => unreachable!("bending energy has no ε: {other}"),
    })?;
    let area_bound = surface_area + 12.0 * bending;
    Ok(GraphAreaCertificate {
        graph_area,
        surface_area,
        bending,
        area_bound,
        area_bound_holds: graph_area <= area_bound,
        jac_bound_violations: ratios.iter().enumerate().filter(|(_, &r)| r > 1.0).map(|(f, _)| f).collect(),
        max_jac_ratio: ratios.iter().copied().fold(0.0, f64::max),
    })
}

/// Graph-side bending energy and its bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphEnergyReport {
    pub energy: f64,
    /// Faces skipped for small `θ̄·ν` or `|η₀|`.
    pub excluded_faces: Vec<usize>,
    /// Largest `X_y` membership residual of `η₁/|η₀|`, relative to its norm.
    pub max_membership_residual: f64,
}

/// Integrand of the graph-side energy for one face, through the unit
/// 2-vector `η = ξ/|ξ|` and the graph area element `jac · area`.
///
/// Returns `None` for excluded faces.
pub fn graph_energy_face(frame: &FaceFrame, g: &GraphFaceData, y: Vec3) -> Option<(f64, f64)> {
    let eta = g.xi.scale(1.0 / g.jac);
    let eta0 = eta.part0.norm();
    if g.theta_dot_nu < MIN_THETA_DOT_NU || eta0 < MIN_ETA0 {
        return None;
    }
    let zeta = eta.part1.scale(1.0 / eta0);
    let wedge = eta.part0.scale(1.0 / eta0).wedge_vec(y);
    let f = f_y(&zeta, y).ok()?;
    let m = membership_residuals(&zeta, y).iter().fold(0.0f64, |a, r| a.max(r.abs())) / 1f64.max(zeta.norm());
    Some((f / (wedge * wedge) * eta0 * g.jac * frame.area, m))
}

/// `∫_G |η₀/|η₀| ∧ y|⁻² f_y(η₁/|η₀|) |η₀|` with `y = θ̄` on each face.
pub fn graph_energy(mesh: &TriMesh, field: &DirectorField) -> Result<GraphEnergyReport, GraphError> {
    let faces = graph_faces(mesh, field)?;
    let per: Vec<Option<(f64, f64)>> = faces
        .par_iter()
        .map(|(fr, d, g)| graph_energy_face(fr, g, d.theta_bar))
        .collect();
    let values: Vec<f64> = per.iter().map(|p| p.map_or(0.0, |v| v.0)).collect();
    Ok(GraphEnergyReport {
        energy: det_sum(&values),
        excluded_faces: per.iter().enumerate().filter(|(_, p)| p.is_none()).map(|(f, _)| f).collect(),
        max_membership_residual: per.iter().flatten().map(|v| v.1).fold(0.0, f64::max),
    })
}

/// `⟨φ∧ω, ξ⟩` with `φ = Σ yⱼ dxʲ`, contracted over all 15 coordinates of Λ²(R⁶).
pub fn pair_phi_wedge_coords(omega: &[f64; 6], y: Vec3, xi: &TwoVector6) -> f64 {
    let phi = [y.x, y.y, y.z, 0.0, 0.0, 0.0];
    let flat = xi.flatten();
    lambda2_r6_pairs()
        .iter()
        .zip(flat)
        .map(|(&(a, b), x)| (phi[a] * omega[b] - phi[b] * omega[a]) * x)
        .sum()
}

/// Same pairing evaluated on the frame: `(y·τ₁) ω(τ₂, Lτ₂) − (y·τ₂) ω(τ₁, Lτ₁)`.
pub fn pair_phi_wedge_frame(omega: &[f64; 6], y: Vec3, frame: &FaceFrame, l: &Mat3) -> f64 {
    let w = |v: Vec3| {
        let lv = l.mul_vec(v);
        omega[0] * v.x + omega[1] * v.y + omega[2] * v.z + omega[3] * lv.x + omega[4] * lv.y + omega[5] * lv.z
    };
    y.dot(frame.tau1) * w(frame.tau2) - y.dot(frame.tau2) * w(frame.tau1)
}

/// `⟨φ*, ξ₀⟩ = Σ_{i<j} Σ_k ε_ijk y_k ξ₀^{ij}`.
pub fn pair_phi_star_coords(y: Vec3, xi0: &Bivector3) -> f64 {
    let yv = y.to_array();
    let mut s = 0.0;
    for i in 0..3 {
        for j in (i + 1)..3 {
            for (k, yk) in yv.iter().enumerate() {
                s += levi_civita(i, j, k) * yk * xi0.component(i, j);
            }
        }
    }
    s
}

/// Results of pairing the discrete graph current with the test forms.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurrentPairings {
    /// `Σ ⟨φ*, ξ₀⟩ g(p, θ̄) area`.
    pub pair_phi_star: f64,
    /// `Σ (θ̄·ν) g(p, θ̄) area`.
    pub pair_phi_star_direct: f64,
    /// `Σ ⟨φ∧ω, ξ⟩ area` over the 15 coordinates.
    pub pair_phi_wedge: f64,
    /// Same sum through the face frame.
    pub pair_phi_wedge_direct: f64,
    /// `max_f |ω(centroid, θ̄)|`.
    pub omega_norm: f64,
    /// `∫ (1 − (θ̄·ν)²)`.
    pub tilt_integral: f64,
    /// `∫ (1 + Q(L))`.
    pub energy_integral: f64,
    /// `‖ω‖ ∫ √(1−(θ̄·ν)²) √(2 + |Lτ₁|² + |Lτ₂|²)`.
    pub intermediate_bound: f64,
    /// `‖ω‖ (∫(1−(θ̄·ν)²))^½ (∫(1+Q))^½`, without the constant.
    pub bound: f64,
    /// `|pair_phi_wedge| / bound`, to be compared with [`PAIRING_CONSTANT`].
    pub ratio: f64,
    pub ratio_holds: bool,
    pub intermediate_holds: bool,
}

/// Constant in the pairing bound: `2 + |Lτ₁|² + |Lτ₂|² ≤ 12 (1 + Q(L))`.
pub const PAIRING_CONSTANT: f64 = 3.464_101_615_137_754_6;

/// Pairs the discrete graph current with `g φ*` and `φ∧ω`.
pub fn current_pairings(mesh: &TriMesh, field: &DirectorField, forms: &TestForms) -> Result<CurrentPairings, GraphError> {
    let faces = graph_faces(mesh, field)?;
    struct Face {
        star: f64,
        star_direct: f64,
        wedge: f64,
        wedge_direct: f64,
        omega_abs: f64,
        tilt: f64,
        energy: f64,
        pointwise: f64,
    }
    let per: Vec<Face> = faces
        .par_iter()
        .enumerate()
        .map(|(f, (fr, d, g))| {
            let p = mesh.face_centroid(f);
            let y = d.theta_bar;
            let gv = forms.g.eval(p, y);
            let om = forms.omega.eval(p, y);
            let sin_sq = y.cross(fr.nu).norm_sq();
            let s = d.l.mul_vec(fr.tau1).norm_sq() + d.l.mul_vec(fr.tau2).norm_sq();
            Face {
                star: pair_phi_star_coords(y, &g.xi.part0) * gv * fr.area,
                star_direct: g.theta_dot_nu * gv * fr.area,
                wedge: pair_phi_wedge_coords(&om, y, &g.xi) * fr.area,
                wedge_direct: pair_phi_wedge_frame(&om, y, fr, &d.l) * fr.area,
                omega_abs: om.iter().map(|c| c * c).sum::<f64>().sqrt(),
                tilt: sin_sq * fr.area,
                energy: (1.0 + crate::multilinear::quadratic_form_q(&d.l)) * fr.area,
                pointwise: sin_sq.sqrt() * (2.0 + s).sqrt() * fr.area,
            }
        })
        .collect();
    let sum = |k: fn(&Face) -> f64| det_sum(&per.iter().map(k).collect::<Vec<_>>());
    let omega_norm = per.iter().map(|f| f.omega_abs).fold(0.0, f64::max);
    let pair_phi_wedge = sum(|f| f.wedge);
    let tilt_integral = sum(|f| f.tilt);
    let energy_integral = sum(|f| f.energy);
    let intermediate_bound = omega_norm * sum(|f| f.pointwise);
    let bound = omega_norm * tilt_integral.sqrt() * energy_integral.sqrt();
    let ratio = if bound > 0.0 { pair_phi_wedge.abs() / bound } else { 0.0 };
    let slack = 1e-12 * 1f64.max(intermediate_bound);
    Ok(CurrentPairings {
        pair_phi_star: sum(|f| f.star),
        pair_phi_star_direct: sum(|f| f.star_direct),
        pair_phi_wedge,
        pair_phi_wedge_direct: sum(|f| f.wedge_direct),
        omega_norm,
        tilt_integral,
        energy_integral,
        intermediate_bound,
        bound,
        ratio,
        ratio_holds: pair_phi_wedge.abs() <= PAIRING_CONSTANT * bound + slack,
        intermediate_holds: pair_phi_wedge.abs() <= intermediate_bound + slack,
    })
}

/// `∫ defect` and `∫ defect^{3/2}` over the mesh.
pub fn integrated_defect(mesh: &TriMesh, field: &DirectorField) -> Result<(f64, f64, f64), GraphError> {
    let faces = graph_faces(mesh, field)?;
    let d1: Vec<f64> = faces.iter().map(|(fr, _, g)| g.defect * fr.area).collect();
    let d32: Vec<f64> = faces.iter().map(|(fr, _, g)| g.defect.powf(1.5) * fr.area).collect();
    let max = faces.iter().map(|(_, _, g)| g.defect).fold(0.0, f64::max);
    Ok((det_sum(&d1), det_sum(&d32), max))
}

/// `⟨Ψ_θ, ζ⟩ = −⟨Ψ_θ, ζᵀ⟩` residual.
pub fn psi_antisymmetry_residual(theta: Vec3, zeta: &Mat3) -> f64 {
    let psi = PsiForm::new(theta);
    relative_residual(psi.pair(zeta), -psi.pair(&zeta.transpose()))
}

/// `*ν` as the 2-vector `τ₁∧τ₂`, for callers comparing with `ξ₀`.
pub fn frame_bivector(frame: &FaceFrame) -> Bivector3 {
    wedge3(frame.tau1, frame.tau2)
}
