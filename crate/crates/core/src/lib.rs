//! Hermite-Birkhoff interpolation of scattered data on parametric surfaces.
//!
//! The interpolant is a partition of unity built from cardinal basis
//! functions of the geodesic distance, with incomplete Taylor expansions at
//! the nodes as coefficients. No linear system is solved.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod geodesics;
pub mod geometry;
pub mod harness;
pub mod interpolant;
pub mod pointsets;
