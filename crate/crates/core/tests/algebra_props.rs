use proptest::prelude::*;

use tiltbend::multilinear::{
    det_cayley_hamilton, hodge_star, hodge_unstar, matrix_identity_residuals, project_off, quadratic_form_q,
    quadratic_form_q_eigen, relative_residual, wedge3, Mat3, TwoVector6, Vec3, LAMBDA2_R6_DIM,
};
use tiltbend::director::FaceDirectorData;
use tiltbend::multilinear::complement_projector;

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-r..r).prop_map(Vec3::from_array)
}

fn unit() -> impl Strategy<Value = Vec3> {
    vec3(1.0).prop_filter("away from zero", |v| v.norm() > 0.1).prop_map(Vec3::normalized)
}

fn mat3(r: f64) -> impl Strategy<Value = Mat3> {
    prop::array::uniform3(prop::array::uniform3(-r..r)).prop_map(Mat3)
}

proptest! {
    #[test]
    fn wedge_is_antisymmetric_with_lagrange_norm(a in vec3(3.0), b in vec3(3.0)) {
        let w = wedge3(a, b);
        let v = wedge3(b, a);
        for (x, y) in w.to_array().into_iter().zip(v.to_array()) {
            prop_assert_eq!(x, -y);
        }
        let lagrange = a.norm_sq() * b.norm_sq() - a.dot(b).powi(2);
        prop_assert!(relative_residual(w.norm_sq(), lagrange) < 1e-12);
    }

    #[test]
    fn hodge_round_trip(v in vec3(5.0)) {
        let back = hodge_unstar(hodge_star(v));
        prop_assert!((back - v).max_abs() <= 1e-15 * v.max_abs().max(1.0));
    }

    #[test]
    fn unit_hodge_has_unit_norm(v in unit()) {
        prop_assert!((hodge_star(v).norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn stratified_storage_is_lossless(w in prop::array::uniform15(-3.0..3.0f64)) {
        let t = TwoVector6::stratify(&w);
        let back = t.flatten();
        prop_assert_eq!(back.len(), LAMBDA2_R6_DIM);
        for (x, y) in w.iter().zip(back) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn cayley_hamilton_matches_cofactor_expansion(m in mat3(3.0)) {
        prop_assert!(relative_residual(m.det(), det_cayley_hamilton(&m)) <= 1e-10);
    }

    #[test]
    fn cofactor_adjugate_identity(m in mat3(3.0)) {
        let prod = m * m.cofactor().transpose();
        let d = m.det();
        let err = (prod - Mat3::IDENTITY.scale(d)).max_abs();
        prop_assert!(err <= 1e-12 * 1f64.max(m.max_abs().powi(3)));
    }

    #[test]
    fn matrix_identities_hold(m in mat3(2.0), y in unit()) {
        for r in matrix_identity_residuals(&m, y).unwrap() {
            prop_assert!(r.residual <= 1e-10, "{:?}", r);
        }
    }

    #[test]
    fn projected_cofactor_trace(m in mat3(2.0), y in unit()) {
        let a = project_off(&m, y);
        let lhs = y.dot(a.cofactor().mul_vec(y));
        prop_assert!(relative_residual(lhs, a.trace_cofactor()) <= 1e-12);
    }

    #[test]
    fn quadratic_form_matches_eigen_form_and_is_coercive(s in mat3(3.0), theta in unit()) {
        let p = complement_projector(theta);
        let l = p * s.symmetric_part() * p;
        let d = FaceDirectorData::from_symmetric(theta, l);
        let q = quadratic_form_q(&l);
        prop_assert!(relative_residual(q, quadratic_form_q_eigen(d.lambda1, d.lambda2)) <= 1e-10);
        prop_assert!(q >= (d.lambda1.powi(2) + d.lambda2.powi(2)) / 12.0 - 1e-12);
        prop_assert!(relative_residual(l.trace(), d.lambda1 + d.lambda2) <= 1e-10);
        prop_assert!(relative_residual(l.trace_cofactor(), d.lambda1 * d.lambda2) <= 1e-10);
        prop_assert!(d.v1.cross(d.v2).dot(theta) > 1.0 - 1e-12);
    }
}
