//! Numerical Gromov limits for sequences of rational curves in projective space.
//!
//! A degree-`d` holomorphic map from the Riemann sphere to complex projective
//! space is an `n`-tuple of degree-`d` homogeneous polynomials in two variables
//! with no common root. This crate computes, for a sequence of such maps given
//! in coefficients, the objects appearing in its Gromov limit:
//!
//! * the coefficient-wise limit tuple and its common-factor structure, which
//!   locates the bubble points and their energy masses ([`bubble`]);
//! * Fubini-Study energies of regions, energy densities, and related metric
//!   quantities, via deterministic adaptive quadrature ([`fs`]);
//! * the full bubble tree: limit map and degree per component, attachment
//!   points, and connectivity gaps ([`bubble::build_bubble_tree`]);
//! * trees of spheres, nodal configurations, and the stability test for the
//!   resulting decorated trees ([`tree`]);
//! * numerical checks of the analytic inequalities that drive the
//!   compactness argument: mean-value bound, order/limit identities, energy
//!   monotonicity, cylinder decay, the isoperimetric bound, and the Poincare
//!   inequality on the circle ([`lab`]).
//!
//! All floating-point pipelines are deterministic: given identical inputs and
//! tolerances the crate produces bit-identical results, with or without the
//! `parallel` feature (rayon). Parallel refinement works in fixed batches and
//! every final reduction re-sums in a fixed order with compensated summation.

pub mod bubble;
pub mod error;
pub mod fs;
pub mod lab;
pub mod poly;
pub mod quad;
pub mod tree;

pub use error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type Complex = num_complex::Complex64;

/// Tolerance for identifying two points of the projective line: points are
/// considered equal when the modulus of the cross product of max-norm-1
/// homogeneous representatives is at most this value.
pub const TAU_POINT: f64 = 1e-6;

/// Base tolerance for clustering polynomial roots, scaled by `max(1, |z|)`.
pub const TAU_ROOT: f64 = 1e-6;

/// Maps `f` over `items`, preserving order. Fans out across threads when the
/// `parallel` feature is on; `f` must be deterministic per item, so that the
/// collected output does not depend on scheduling.
#[cfg(feature = "parallel")]
pub(crate) fn par_map_ordered<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map_ordered<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}
