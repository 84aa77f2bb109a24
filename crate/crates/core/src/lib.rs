//! Common fixed points of one-parameter nonexpansive semigroups computed from two
//! sampled operators `T(α)` and `T(β)` with incommensurable `α` and `β`.
//!
//! * [`vecspace`]: points, convex domains, and a Jacobi symmetric eigensolver.
//! * [`semigroups`]: built-in semigroups with closed-form common fixed sets.
//! * [`stepseq`]: greedy time decompositions and Euclidean remainder sequences.
//! * [`characterize`]: two-generator residuals, time-grid profiles, certification.
//! * [`schemes`]: Baillon, Mann, averaged Mann, Ishikawa, Browder and Halpern iterations.
//! * [`cli`]: the `semiflow` command-line harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characterize;
pub mod cli;
pub mod error;
pub mod schemes;
pub mod semigroups;
pub mod stepseq;
pub mod vecspace;

pub use error::{Error, Result};
pub use vecspace::{ConvexDomain, StatePoint};
