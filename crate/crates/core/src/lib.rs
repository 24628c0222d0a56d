//! Gaussian vectors and fields: covariance kernels, exact samplers, increasing
//! events with their thresholds, Monte Carlo checks of decoupling inequalities
//! and a multi-scale bootstrap engine.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod bootstrap;
pub mod error;
pub mod events;
pub mod experiment;
pub mod kernels;
pub mod linalg;
pub mod mc;
pub mod measures;
pub mod quad;
pub mod sampler;

pub use error::{Error, Result};
