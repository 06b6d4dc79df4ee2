//! Numerical tools for invariant measures of one-dimensional maps and their
//! behaviour under small perturbations.

// `!(x >= 0.0)` is used on purpose so that NaN fails range checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod birkhoff;
pub mod cli;
pub mod error;
pub mod measures;
pub mod stability;
pub mod systems;
pub mod ulam;

pub use error::{Error, Result};
