//! Quasi-distance maps and minimizing geodesics for the Reeds-Shepp car
//! models on position–orientation space `R^d × S^(d-1)`, `d ∈ {2, 3}`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cost;
pub mod error;
pub mod manifold;
pub mod solver_fm;
pub mod solver_iterative;
pub mod tessellation;
pub mod tracing;

pub use error::{Error, Result};
