//! Finite-dimensional machinery for singular reduction: generalized inverses
//! and regular factorizations, Lyapunov-Schmidt / Kuranishi normal forms,
//! momentum maps with singular symplectic reduction, the cotangent-reduced
//! harmonic oscillator with its seam structure, and the SU(2) x U(1)
//! electroweak gauge algebra.
//!
//! The crate is `no_std`-compatible (an allocator is required); the `std`
//! feature (default) only forwards to the numeric backends.
//!
//! Conventions used throughout, chosen once and tested:
//! - canonical symplectic form on R^(2n) = {(q, p)}:
//!   omega((q, p), (q', p')) = q . p' - p . q', block matrix [[0, I], [-I, 0]];
//! - quadratic momentum of an infinitesimally symplectic generator xi:
//!   J_xi(x) = (1/2) omega(x, xi x);
//! - cotangent-lift momentum on T*Q = {(x, alpha)}: J_xi(x, alpha) = <alpha, xi . x>;
//! - Poisson bracket {F, G} = grad_p F . grad_q G - grad_q F . grad_p G
//!   (the sign that realizes {H, E+} = -2 E-, {H, E-} = +2 E+, {E+, E-} = 2H
//!   for the oscillator invariants).

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod cotred;
pub mod gaugealg;
pub mod group;
pub mod linops;
pub mod lsreduce;
pub mod symred;

mod sample;
mod subspace;

pub use sample::{rng_from_seed, Halton};
pub use subspace::{containment_defect, intersect_spans, null_space, orthonormal_complement, subspaces_equal};

/// Numerical policy shared by every operation that makes a rank decision or
/// accepts a residual. Both values are deliberate, documented choices:
/// `rank_tol` is relative (singular values below `rank_tol * sigma_max` are
/// treated as zero) and `residual_tol` is absolute on defect norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TolerancePolicy {
    pub rank_tol: f64,
    pub residual_tol: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self { rank_tol: 1e-10, residual_tol: 1e-8 }
    }
}

impl TolerancePolicy {
    pub fn new(rank_tol: f64, residual_tol: f64) -> Self {
        Self { rank_tol, residual_tol }
    }
}
