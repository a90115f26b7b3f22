//! Numerical building blocks: quadrature, compensated sums, statistics, seeding.

pub mod quad;
pub mod rng;
pub mod stats;
pub mod sum;
