//! Numerical checks of the function-space estimates satisfied by solutions
//! and Green functions: sampled BMO norms, singularity and decay fits,
//! inequality suites, the Meyers exponent diagnostic and cross-identities.
//!
//! Every check returns a [`VerificationReport`](crate::report::VerificationReport)
//! whose pass flag is computed from the reported quantities and thresholds
//! only. Constants are never asserted, only finiteness and stability under
//! refinement.

mod atoms;
mod bmo;
mod fields;
mod fits;
mod identities;
mod inequalities;
mod meyers;

pub use atoms::{random_atoms, Atom, AtomShape};
pub use bmo::{bmo_norm, BmoEstimate, BmoSampling};
pub use fields::{sample_local_domains, SmoothField};
pub use fits::{boundary_decay_samples, circle_average, fit_decay_exponent, fit_log_singularity, least_squares, LinearFit};
pub use identities::{
    verify_green_identity, verify_neumann_duality, verify_representation, verify_representation_neumann,
    verify_symmetry, SymmetryMode,
};
pub use inequalities::{
    caccioppoli_ratio, grad_lp, lp_norm, verify_inequality, InequalityConfig, InequalityKind, GROWTH_LIMIT,
    MIN_SAMPLES,
};
pub use identities::IDENTITY_TOL;
pub use meyers::{meyers_exponent, MeyersProblem};
