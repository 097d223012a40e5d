//! Bounds for cardinality-constrained portfolio selection.
//!
//! The crate builds the semidefinite relaxation of the mixed-integer
//! portfolio problem (minimum variance under a return floor, a budget cap
//! and a limit on the number of traded assets), solves it with a dense
//! primal-dual interior-point method, extracts feasible portfolios from
//! near-rank-one solutions, and validates both bounds against exact
//! enumeration and branch-and-bound oracles.
//!
//! Module map:
//! - [`instance`]: problem data, validation, JSON serialization, generator
//! - [`linalg`]: dense symmetric kernels (Cholesky, eigen, SVD)
//! - [`sdp`]: the lifted relaxation as a standard-form conic problem
//! - [`ipm`]: the interior-point solver for that conic form
//! - [`qp`]: reduced convex QPs over a fixed support
//! - [`exact`]: support enumeration and branch-and-bound ground truth
//! - [`cardopt`]: the end-to-end lower-bound / rounding pipeline

pub mod cardopt;
pub mod exact;
pub mod instance;
pub mod ipm;
pub mod linalg;
pub mod qp;
pub mod sdp;
