//! Seeded battery of algebraic identities on random instances.
//!
//! Every trial draws its instance from its own ChaCha8 stream, so the report
//! does not depend on how trials are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::director::FaceDirectorData;
use crate::gauss_graph::{
    closed_form_residuals, defect_from_xi1, graph_energy_face, graph_xi, membership_residuals, psi_antisymmetry_residual,
    raw_xi, xi_trace_identities,
};
use crate::mesh::FaceFrame;
use crate::multilinear::{
    complement_projector, hodge_star, levi_civita, matrix_identity_residuals, quadratic_form_q, quadratic_form_q_eigen,
    relative_residual, wedge3, Mat3, Vec3,
};
use crate::spectral::{quadratic_consistency, FlattenedXi, SpectralBasis, Vec9};
use crate::varifold::{hk_from_a, second_fundamental_a, varifold_a_from_graph};

/// Largest residual a passing identity may show.
pub const VERIFY_TOLERANCE: f64 = 1e-9;
/// Failures kept per identity; the count is always complete.
pub const MAX_RECORDED_FAILURES: usize = 8;
/// Smallest `θ·ν` drawn for graph-side instances.
const MIN_DRAWN_DOT: f64 = 0.1;

/// Inputs of one trial, serialized into failure records.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialInput {
    pub trial: u64,
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub m: [[f64; 3]; 3],
    pub y: [f64; 3],
    pub nu: [f64; 3],
    pub theta: [f64; 3],
    pub tau_seed: [f64; 3],
    /// Symmetric matrix compressed to `θ⊥` (and to `ν⊥`) to give `L`.
    pub s: [[f64; 3]; 3],
    pub zeta: [[f64; 3]; 3],
    pub zeta2: [[f64; 3]; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub residual: f64,
    pub input: TrialInput,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityStats {
    pub name: &'static str,
    pub trials: u64,
    pub max_residual: f64,
    pub failures: u64,
    pub recorded: Vec<Failure>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub trials: u64,
    pub tolerance: f64,
    pub identities: Vec<IdentityStats>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn get(&self, name: &str) -> Option<&IdentityStats> {
        self.identities.iter().find(|s| s.name == name)
    }
}

fn unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v * (1.0 / n);
        }
    }
}

fn matrix(rng: &mut ChaCha8Rng, r: f64) -> Mat3 {
    Mat3(std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-r..r))))
}

fn rows(m: &Mat3) -> [[f64; 3]; 3] {
    m.0
}

impl TrialInput {
    fn draw(rng: &mut ChaCha8Rng, trial: u64) -> Self {
        let a = unit(rng) * rng.gen_range(0.1..3.0);
        let b = unit(rng) * rng.gen_range(0.1..3.0);
        let m = matrix(rng, 2.0);
        let y = unit(rng);
        let nu = unit(rng);
        let theta = loop {
            let t = unit(rng);
            if t.dot(nu) >= MIN_DRAWN_DOT {
                break t;
            }
        };
        let tau_seed = unit(rng);
        let s = matrix(rng, 2.0).symmetric_part();
        let zeta = matrix(rng, 2.0);
        let zeta2 = matrix(rng, 2.0);
        Self {
            trial,
            a: a.to_array(),
            b: b.to_array(),
            m: rows(&m),
            y: y.to_array(),
            nu: nu.to_array(),
            theta: theta.to_array(),
            tau_seed: tau_seed.to_array(),
            s: rows(&s),
            zeta: rows(&zeta),
            zeta2: rows(&zeta2),
        }
    }
}

/// `ζP − ½ tr(ζP) P` with `P = I − yyᵀ`, an element of `X_y`.
fn into_x_y(zeta: &Mat3, y: Vec3) -> Mat3 {
    let p = complement_projector(y);
    let zp = *zeta * p;
    zp - p.scale(0.5 * zp.trace())
}

/// Cross product by cofactor expansion of `det[e; a; b]`.
fn cross_by_cofactors(a: Vec3, b: Vec3) -> Vec3 {
    let m = Mat3::from_rows(Vec3::ZERO, a, b);
    let c = m.cofactor();
    Vec3::new(c[(0, 0)], c[(0, 1)], c[(0, 2)])
}

const MATRIX_NAMES: [&str; 6] = ["lemLA1", "lemLA2", "lemLA3", "lemLA4", "rank_one_det", "cayley_hamilton_det"];
const SPECTRAL_NAMES: [&str; 11] = [
    "spectral_eigen",
    "v_minus1",
    "Xsp_cap1",
    "Xsp_cap0",
    "membership_cross",
    "norm_pi0",
    "F_eigen",
    "growth",
    "F_midpoint_convex",
    "quadratic_consistency",
    "defect_pi0",
];

type Row = (&'static str, Option<f64>);

fn push_all(out: &mut Vec<Row>, res: impl IntoIterator<Item = (&'static str, f64)>) {
    out.extend(res.into_iter().map(|(n, r)| (n, Some(r))));
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// All identity residuals of one instance, in a fixed order.
///
/// A `None` residual means the identity does not apply to this instance.
fn run_trial(input: &TrialInput) -> Vec<Row> {
    let v = Vec3::from_array;
    let (a, b, y, nu, theta) = (v(input.a), v(input.b), v(input.y), v(input.nu), v(input.theta));
    let m = Mat3(input.m);
    let s = Mat3(input.s);
    let mut out: Vec<Row> = Vec::with_capacity(64);

    // Wedge against the cross product.
    let w = wedge3(a, b);
    let c = cross_by_cofactors(a, b);
    let aux1 = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .map(|(i, j)| {
            let rhs: f64 = (0..3).map(|k| c[k] * levi_civita(i, j, k)).sum();
            relative_residual(w.component(i, j), rhs)
        })
        .fold(0.0, f64::max);
    out.push(("aux1", Some(aux1)));

    match matrix_identity_residuals(&m, y) {
        Ok(res) => push_all(&mut out, res.into_iter().map(|r| (r.name, r.residual))),
        Err(_) => push_all(&mut out, MATRIX_NAMES.map(|n| (n, f64::INFINITY))),
    }

    // Face instance: frame from ν, director θ, L = P_θ S P_θ.
    let frame = FaceFrame::from_normal_and_seed(nu, if tau_seed_ok(nu, v(input.tau_seed)) { v(input.tau_seed) } else { Vec3::E1 }, 1.0);
    let pt = complement_projector(theta);
    let l = pt * s * pt;
    let data = FaceDirectorData::from_symmetric(theta, l);

    push_all(&mut out, closed_form_residuals(&frame, &data).into_iter().map(|r| (r.name, r.residual)));
    push_all(&mut out, xi_trace_identities(&frame, &data).into_iter().map(|r| (r.name, r.residual)));
    out.push(("Q_eigen", Some(relative_residual(quadratic_form_q(&l), quadratic_form_q_eigen(data.lambda1, data.lambda2)))));

    let qfu = graph_xi(&frame, &data).ok().and_then(|g| graph_energy_face(&frame, &g, theta));
    out.push((
        "Qfu1",
        Some(match qfu {
            Some((e, _)) => relative_residual(e, quadratic_form_q(&l) * frame.area),
            None => f64::INFINITY,
        }),
    ));

    // Spectral side on y = θ̄ with u = ξ₁, and on y with a random u ∈ X̃_y.
    let xi1 = raw_xi(&frame, &data).part1;
    let spectral = SpectralBasis::build(y).and_then(|basis| SpectralBasis::build(theta).map(|bt| (basis, bt)));
    match spectral {
        Err(_) => push_all(&mut out, SPECTRAL_NAMES.map(|n| (n, f64::INFINITY))),
        Ok((basis, bt)) => {
            let eig = basis.eigen_residuals().into_iter().chain(bt.eigen_residuals()).map(|(_, r)| r);
            out.push(("spectral_eigen", Some(max_abs(eig))));

            let flat = |x: Vec3| [x.x, x.y, x.z];
            let mut expect = [0.0; 9];
            for blk in 0..3 {
                for k in 0..3 {
                    expect[3 * blk + k] = y[blk] * flat(y)[k] - if blk == k { 1.0 } else { 0.0 };
                }
            }
            out.push(("v_minus1", Some(max_abs((0..9).map(|i| basis.v_m1[i] - expect[i])))));

            let zeta = into_x_y(&Mat3(input.zeta), y);
            let zeta2 = into_x_y(&Mat3(input.zeta2), y);
            let u = FlattenedXi::from_mat(&zeta).to_vec9();
            let u2 = FlattenedXi::from_mat(&zeta2).to_vec9();
            let scale = 1f64.max(u.norm());
            out.push(("Xsp_cap1", Some(basis.v_m1.dot(&u).abs() / scale)));
            out.push(("Xsp_cap0", Some(max_abs(basis.v0[..3].iter().map(|v0| v0.dot(&u))) / scale)));

            let gm = membership_residuals(&zeta, y);
            let sm = basis.membership_residuals(&u);
            out.push(("membership_cross", Some(max_abs((0..4).map(|i| gm[i] - sm[i])))));

            let gram = basis.project_pi0(&u).norm_squared();
            out.push((
                "norm_pi0",
                Some(match basis.norm_pi0_fast(&u) {
                    Ok(fast) => relative_residual(fast, gram),
                    Err(_) => f64::INFINITY,
                }),
            ));

            out.push(("F_eigen", Some(relative_residual(basis.f_convex(&u), basis.f_convex_eigen(&u)))));
            let f = basis.f_convex(&u);
            out.push(("growth", Some((-basis.growth_slack(&u)).max(0.0) / 1f64.max(f.abs()))));
            let mid: Vec9 = (u + u2) * 0.5;
            let (fm, fa, fb) = (basis.f_convex(&mid), f, basis.f_convex(&u2));
            out.push(("F_midpoint_convex", Some((fm - 0.5 * (fa + fb)).max(0.0) / 1f64.max(fa.abs() + fb.abs()))));

            out.push((
                "quadratic_consistency",
                match quadratic_consistency(&zeta, y) {
                    Ok((_, r)) => Some(r),
                    Err(crate::spectral::SpectralError::ZeroForm) => None,
                    Err(_) => Some(f64::INFINITY),
                },
            ));

            // ξ₁ of the face lies in X̃_θ̄ and its π₀ part is the defect.
            let uxi = FlattenedXi::from_mat(&xi1).to_vec9();
            let d = defect_from_xi1(&xi1, theta);
            out.push((
                "defect_pi0",
                Some(match bt.norm_pi0_fast(&uxi) {
                    Ok(fast) => relative_residual(d * d, fast),
                    Err(_) => f64::INFINITY,
                }),
            ));
        }
    }

    // H = tr L, K = tr cof L for A built from a normal operator.
    let pn = complement_projector(nu);
    let ln = pn * s * pn;
    let dn = FaceDirectorData::from_symmetric(nu, ln);
    match second_fundamental_a(&ln, nu) {
        Ok(at) => {
            let (h, k) = hk_from_a(&at, nu);
            out.push(("HK_mean", Some(relative_residual(h, ln.trace()).max(relative_residual(h, dn.lambda1 + dn.lambda2)))));
            out.push((
                "HK_gauss",
                Some(relative_residual(k, ln.trace_cofactor()).max(relative_residual(k, dn.lambda1 * dn.lambda2))),
            ));
        }
        Err(_) => {
            out.push(("HK_mean", Some(f64::INFINITY)));
            out.push(("HK_gauss", Some(f64::INFINITY)));
        }
    }

    // y ↦ −y with ξ₀ ↦ −ξ₀ leaves A and H unchanged bit for bit.
    let xi0 = hodge_star(y);
    let (a1, h1) = varifold_a_from_graph(&xi0, &xi1, y);
    let (a2, h2) = varifold_a_from_graph(&xi0.scale(-1.0), &xi1, y * -1.0);
    let same = a1.a.iter().flatten().flatten().zip(a2.a.iter().flatten().flatten()).all(|(p, q)| p.to_bits() == q.to_bits())
        && h1.to_array().iter().zip(h2.to_array()).all(|(p, q)| p.to_bits() == q.to_bits());
    out.push(("sign_flip", Some(if same { 0.0 } else { a1.sub(&a2).max_abs().max((h1 - h2).max_abs()).max(f64::MIN_POSITIVE) })));

    out.push(("psi_antisymmetry", Some(psi_antisymmetry_residual(theta, &Mat3(input.zeta)))));
    out
}

fn tau_seed_ok(nu: Vec3, seed: Vec3) -> bool {
    seed.reject(nu).norm() > 1e-3
}

/// Runs `trials` instances drawn from `seed`.
pub fn run_verify(seed: u64, trials: u64) -> VerifyReport {
    let results: Vec<(TrialInput, Vec<Row>)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t);
            let input = TrialInput::draw(&mut rng, t);
            let rows = run_trial(&input);
            (input, rows)
        })
        .collect();

    let mut stats: Vec<IdentityStats> = Vec::new();
    for (input, rows) in &results {
        for (n, &(name, r)) in rows.iter().enumerate() {
            if stats.len() <= n {
                stats.push(IdentityStats { name, trials: 0, max_residual: 0.0, failures: 0, recorded: Vec::new() });
            }
            let st = &mut stats[n];
            debug_assert_eq!(st.name, name);
            let Some(r) = r else { continue };
            st.trials += 1;
            if !(r <= VERIFY_TOLERANCE) {
                st.failures += 1;
                if st.recorded.len() < MAX_RECORDED_FAILURES {
                    st.recorded.push(Failure { residual: r, input: input.clone() });
                }
            }
            st.max_residual = if r.is_nan() || st.max_residual.is_nan() { f64::NAN } else { st.max_residual.max(r) };
        }
    }
    let passed = stats.iter().all(|s| s.failures == 0);
    VerifyReport { seed, trials, tolerance: VERIFY_TOLERANCE, identities: stats, passed }
}
