//! Implicit upwind finite-volume solver for aggregation-diffusion equations
//! with (possibly saturating) nonlinear mobility, with the diagnostics and
//! convergence tooling to check it.

// NaN-rejecting `!(x > 0.0)` checks and index loops over coupled arrays are
// deliberate in the numerics.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod autodiff;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod exact;
pub mod grid;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod output;
pub mod quadrature;
pub mod scheme;
