//! 2-vectors on R³ and on R³ₓ ⊕ R³_y.
//!
//! Component ordering is fixed: a [`Bivector3`] stores the coefficients of
//! `e₁∧e₂, e₁∧e₃, e₂∧e₃` in that order, and a flattened 2-vector on R⁶ stores
//! the coefficients of `f_a∧f_b` for `a < b` in lexicographic order, where
//! `f₀..f₂ = e₁..e₃` (x-block) and `f₃..f₅ = ε₁..ε₃` (y-block).

use serde::{Deserialize, Serialize};

use super::{Mat3, Vec3};

/// Levi-Civita symbol on zero-based indices.
#[inline]
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// Element of Λ²(R³) in the basis `{e₁∧e₂, e₁∧e₃, e₂∧e₃}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Bivector3 {
    pub e12: f64,
    pub e13: f64,
    pub e23: f64,
}

impl Bivector3 {
    pub const ZERO: Bivector3 = Bivector3 { e12: 0.0, e13: 0.0, e23: 0.0 };

    pub const fn new(e12: f64, e13: f64, e23: f64) -> Self {
        Self { e12, e13, e23 }
    }

    /// Coefficient of `eᵢ∧eⱼ` with the antisymmetric extension to all index pairs.
    pub fn component(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 1) => self.e12,
            (0, 2) => self.e13,
            (1, 2) => self.e23,
            (1, 0) => -self.e12,
            (2, 0) => -self.e13,
            (2, 1) => -self.e23,
            _ => 0.0,
        }
    }

    /// Antisymmetric matrix representation, entry (i,j) = `component(i, j)`.
    pub fn to_matrix(&self) -> Mat3 {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] = self.component(i, j);
            }
        }
        m
    }

    /// Reads the strictly upper triangle of `m`.
    pub fn from_matrix(m: &Mat3) -> Self {
        Self::new(m[(0, 1)], m[(0, 2)], m[(1, 2)])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.e12, self.e13, self.e23]
    }

    pub fn dot(&self, o: &Bivector3) -> f64 {
        self.e12 * o.e12 + self.e13 * o.e13 + self.e23 * o.e23
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.e12 * s, self.e13 * s, self.e23 * s)
    }

    pub fn sub(&self, o: &Bivector3) -> Self {
        Self::new(self.e12 - o.e12, self.e13 - o.e13, self.e23 - o.e23)
    }

    /// Coefficient of `e₁∧e₂∧e₃` in `self ∧ v`.
    pub fn wedge_vec(&self, v: Vec3) -> f64 {
        self.e12 * v.z - self.e13 * v.y + self.e23 * v.x
    }
}

/// `a ∧ b` in Λ²(R³).
pub fn wedge3(a: Vec3, b: Vec3) -> Bivector3 {
    Bivector3::new(
        a.x * b.y - a.y * b.x,
        a.x * b.z - a.z * b.x,
        a.y * b.z - a.z * b.y,
    )
}

/// Hodge star `Λ¹(R³) → Λ²(R³)`: `*(a e₁ + b e₂ + c e₃) = c e₁∧e₂ − b e₁∧e₃ + a e₂∧e₃`.
pub fn hodge_star(v: Vec3) -> Bivector3 {
    Bivector3::new(v.z, -v.y, v.x)
}

/// Inverse of [`hodge_star`].
pub fn hodge_unstar(b: Bivector3) -> Vec3 {
    Vec3::new(b.e23, -b.e13, b.e12)
}

/// Number of coordinates of Λ²(R⁶).
pub const LAMBDA2_R6_DIM: usize = 15;

/// Index pairs `(a, b)`, `a < b`, of the flattened Λ²(R⁶) coordinates.
pub fn lambda2_r6_pairs() -> [(usize, usize); LAMBDA2_R6_DIM] {
    let mut out = [(0, 0); LAMBDA2_R6_DIM];
    let mut n = 0;
    for a in 0..6 {
        for b in (a + 1)..6 {
            out[n] = (a, b);
            n += 1;
        }
    }
    out
}

/// Element of Λ²(R³ₓ ⊕ R³_y) in stratified form.
///
/// `part0` is the x–x block, `part1(i,j)` the coefficient of `eᵢ∧ε_j`, and
/// `part2` the y–y block.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TwoVector6 {
    pub part0: Bivector3,
    pub part1: Mat3,
    pub part2: Bivector3,
}

impl TwoVector6 {
    /// Splits raw Λ²(R⁶) coordinates into strata.
    pub fn stratify(w: &[f64; LAMBDA2_R6_DIM]) -> Self {
        let mut out = TwoVector6::default();
        for (n, &(a, b)) in lambda2_r6_pairs().iter().enumerate() {
            match (a < 3, b < 3) {
                (true, true) => match (a, b) {
                    (0, 1) => out.part0.e12 = w[n],
                    (0, 2) => out.part0.e13 = w[n],
                    _ => out.part0.e23 = w[n],
                },
                (true, false) => out.part1[(a, b - 3)] = w[n],
                _ => match (a - 3, b - 3) {
                    (0, 1) => out.part2.e12 = w[n],
                    (0, 2) => out.part2.e13 = w[n],
                    _ => out.part2.e23 = w[n],
                },
            }
        }
        out
    }

    /// Inverse of [`TwoVector6::stratify`].
    pub fn flatten(&self) -> [f64; LAMBDA2_R6_DIM] {
        let mut w = [0.0; LAMBDA2_R6_DIM];
        for (n, &(a, b)) in lambda2_r6_pairs().iter().enumerate() {
            w[n] = if b < 3 {
                self.part0.component(a, b)
            } else if a < 3 {
                self.part1[(a, b - 3)]
            } else {
                self.part2.component(a - 3, b - 3)
            };
        }
        w
    }

    pub fn norm_sq(&self) -> f64 {
        self.part0.norm_sq() + self.part1.norm().powi(2) + self.part2.norm_sq()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            part0: self.part0.scale(s),
            part1: self.part1.scale(s),
            part2: self.part2.scale(s),
        }
    }
}

/// A vector of R³ₓ ⊕ R³_y.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec6 {
    pub x: Vec3,
    pub y: Vec3,
}

impl Vec6 {
    pub fn new(x: Vec3, y: Vec3) -> Self {
        Self { x, y }
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.x.x, self.x.y, self.x.z, self.y.x, self.y.y, self.y.z]
    }
}

/// `a ∧ b` in Λ²(R³ₓ ⊕ R³_y), returned stratified.
pub fn wedge6(a: Vec6, b: Vec6) -> TwoVector6 {
    TwoVector6 {
        part0: wedge3(a.x, b.x),
        part1: a.x.outer(b.y) - b.x.outer(a.y),
        part2: wedge3(a.y, b.y),
    }
}
