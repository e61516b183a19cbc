//! Randomized block-coordinate methods for composite convex minimization.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arcd;
pub mod blockspace;
pub mod error;
pub mod harness;
pub mod instances;
pub mod mapping;
pub mod oracles;
pub mod problem;
pub mod rates;
pub mod rbcd;
pub mod rng;
pub mod trace;

pub use blockspace::{BlockMetric, BlockPartition, LWeights};
pub use error::{Error, Result};
pub use problem::Problem;
