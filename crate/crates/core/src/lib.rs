//! Reconstruction of harmonic functions on rank-one hyperbolic ball models
//! from exponentially weighted sums over random point configurations.

// Guards are written `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod error;
pub mod geometry;
pub mod io;
pub mod numeric;
pub mod processes;
pub mod psmeasure;
pub mod reconstruct;
pub mod variance;
pub mod verify;

pub use error::{Error, Result};
