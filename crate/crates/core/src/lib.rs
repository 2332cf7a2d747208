//! Analysis toolkit for lasso problems with arbitrary, possibly rank-deficient,
//! design matrices.
//!
//! The crate computes the full generalized LARS solution path, verifies KKT
//! optimality, characterizes the set of solutions as a polytope, derives
//! component-wise coefficient bounds via linear programming, enumerates the
//! active sets realizable by solutions, and cross-checks everything with
//! independent solvers (coordinate descent, elastic net, proximal gradient).

pub mod error;
pub mod gen;
pub mod kkt;
pub mod larspath;
pub mod lp;
pub mod numkernel;
pub mod polytope;
pub mod report;
pub mod solvers;

pub use error::{Error, Result};
