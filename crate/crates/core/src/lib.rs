//! Auditing finite metric spaces against obstructions to isometric embedding
//! into CAT(0) spaces.
//!
//! - [`metric`]: validated finite metric spaces and their file format.
//! - [`form`], [`boxtimes`], [`sixpoint`], [`ann`]: quadratic metric
//!   inequality families, their evaluation, minimization and search.
//! - [`euclid`]: Euclidean barycenters, the equality cases of the variance
//!   inequalities, and a step-by-step trace of the six-point proof chain.
//! - [`lebedeva`]: six-point configurations in ℝ³ with one stretched pair.
//! - [`graph`]: G-comparison feasibility with verifiable Gram solutions and
//!   Farkas certificates.
//!
//! Every margin is oriented as RHS − LHS: nonnegative means satisfied.

pub mod ann;
pub mod boxtimes;
pub mod error;
pub mod euclid;
pub mod form;
pub mod graph;
pub mod lebedeva;
pub mod metric;
mod optim;
pub mod sixpoint;
pub mod witness;

pub use error::{Error, Result};
pub use metric::{FiniteMetricSpace, ValidationReport};

/// Absolute margin tolerance on spaces normalized to unit diameter.
pub const TOL_MARGIN: f64 = 1e-9;
/// Tolerance of the certificate sum and stochasticity conditions.
pub const TOL_CERT: f64 = 1e-10;
/// Eigenvalue tolerance for positive semidefiniteness.
pub const TOL_EIG: f64 = 1e-9;
