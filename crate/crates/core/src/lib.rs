//! Finite-element Green functions for divergence-form elliptic systems in the
//! plane.
//!
//! The crate builds P1 discretisations of `(Lu)^α = ∂_i(a^{ij}_{αβ} ∂_j u^β)`
//! on polygonal domains whose boundary is split into a Dirichlet part `D` and
//! a Neumann part `N`, and constructs approximate Green functions for the
//! mixed, pure Dirichlet, pure Neumann and free-space problems. The
//! [`analysis`] module turns the estimates these Green functions are expected
//! to satisfy into reproducible numerical checks.
//!
//! Sign convention: a weak solution of the mixed problem satisfies
//! `A(u, φ) = −∫ f·φ + ∫_N f_N·φ dσ` for every test function vanishing on
//! `D`, so for the Laplacian `Δu = f`.

pub mod analysis;
pub mod cli;
pub mod clip;
pub mod config;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod green;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod mixed;
pub mod neumann;
pub mod operators;
pub mod report;

pub use error::{Error, Result};
pub use geometry::{BoundaryTag, Domain, LocalDomain, LocalKind, Point};
pub use green::{GreenBc, GreenField, GreenMatrix, GreenTable};
pub use mesh::{Mesh, QuadPoint, Region};
pub use mixed::{FemSolution, MixedSolver, Operator};
pub use neumann::{KernelBasis, KernelSide, NeumannSolver};
pub use operators::{AssembledSystem, CoefficientField, CoefficientKind};
pub use report::VerificationReport;
