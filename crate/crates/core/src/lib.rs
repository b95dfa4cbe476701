//! Streaming sketches for fractional frequency moments.

// Negated float comparisons like !(x > 0.0) are NaN guards: the error
// branch must also catch NaN, which x <= 0.0 would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod estimators;
pub mod experiment;
pub mod numerics;
pub mod rng;
pub mod sketch;
pub mod stable;
pub mod stream;

pub use error::{Error, Result};
