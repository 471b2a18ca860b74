//! Director-tilt bending energies on closed triangle meshes.
//!
//! The crate evaluates the tilt functional
//! `Q_ε(S, θ) = ε⁻² ∫ (1/(θ·ν) − 1) + ∫ Q(L)` for a unit director field `θ`
//! on a closed surface, together with three reformulations of its bending
//! part: through the 2-vectors of the graph `{(p, θ(p))}`, through a 9×9
//! quadratic form on the mixed stratum, and through the curvature tensor
//! `A_ijk` of the surface viewed as a varifold. The [`harness`] module runs
//! refinement/ε sweeps and a seeded battery of identity checks.

pub mod multilinear;
pub mod director;
pub mod energy;
pub mod fit;
pub mod gauss_graph;
pub mod mesh;
pub mod reduce;
pub mod spectral;
pub mod varifold;
pub mod harness;
