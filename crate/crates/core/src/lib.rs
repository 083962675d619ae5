//! Stationary statistics of a stochastic mRNA/microRNA regulation model.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod csvio;
pub mod distributions;
pub mod error;
pub mod fv;
pub mod inequalities;
pub mod params;
pub mod quadrature;
pub mod sde;
pub mod special;
pub mod sweep;

pub use error::{Error, Result};
pub use params::{DimensionlessParams, ModelParams, NoiseLaw};
