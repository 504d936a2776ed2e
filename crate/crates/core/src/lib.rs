//! Numerical laboratory for the smoothness of solutions of nonlocal elliptic
//! problems at conjugation points.
//!
//! Planar elliptic problems with nonlocal boundary conditions can lose
//! `W^2` regularity at the points separating boundary arcs that carry
//! different conditions, even when the boundary itself is smooth. Whether
//! smoothness survives is governed by the spectrum of an operator pencil on
//! the angular cross-section of each orbit of conjugation points, plus (in
//! the border case) consistency conditions on the data. This crate computes
//! all of it:
//!
//! * [`geometry`] - problem data model, orbits, localization of boundary
//!   transformations, frozen model problems;
//! * [`pencil`] - the characteristic matrix of the model pencil, eigenvalue
//!   search in a horizontal band via the argument principle, Jordan
//!   structure, proper/improper classification;
//! * [`consistency`] - differentiated nonlocal operators, beta coefficients,
//!   weighted `r^{-1}` integral diagnostics, coefficient and admissibility
//!   checks;
//! * [`classifier`] - the Preserves / Border / Violates verdict with
//!   obligations and explicit singular witnesses;
//! * [`solver`] - log-polar finite-difference solver of the model problem,
//!   singularity-exponent fits and discrete `W^2` blow-up diagnostics;
//! * [`catalog`] - built-in example specs and shipped experiments.
//!
//! The numeric core is generic over the scalar type via [`num::Real`]
//! (`f32` or `f64`); the aliases below fix the `f64` instantiation that the
//! CLI and the test suites use.

pub mod catalog;
pub mod classifier;
pub mod consistency;
pub mod geometry;
pub mod linalg;
pub mod num;
pub mod pencil;
pub mod report;
pub mod solver;

pub use num::Real;

/// Default scalar for binaries and tests.
pub type Scalar = f64;

pub type ProblemSpec = geometry::ProblemSpec<Scalar>;
pub type OrbitModel = geometry::OrbitModel<Scalar>;
pub type SpectralReport = pencil::SpectralReport<Scalar>;
pub type PencilEigenvalue = pencil::PencilEigenvalue<Scalar>;
pub type Verdict = classifier::Verdict<Scalar>;
pub type SingularWitness = classifier::SingularWitness<Scalar>;
pub type ConsistencyReport = consistency::ConsistencyReport<Scalar>;
pub type DiscreteSolution = solver::DiscreteSolution<Scalar>;
