//! Stochastic-volatility inference on the gamma chain and the lognormal chain.

// `!(x > 0.0)` is the NaN-rejecting form used throughout the numerics.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod derivations;
pub mod engine;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod laplace;
pub mod mc;
pub mod model;
pub mod numerics;
pub mod quadrature;
pub mod report;
pub mod simulate;
pub mod vi;

pub use error::{Error, Result};
