//! Simulation of random road networks built from a Poisson process of lines
//! with heavy-tailed speed limits, and of the optimal travel-time metric they
//! induce.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod estimators;
pub mod geom;
pub mod metric;
pub mod sampler;
pub mod stats;

pub use error::{Error, Result};
