//! Simulators, baselines, Monte-Carlo audits and the command-line front end
//! for streaming CDF confidence bands.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod coverage;
pub mod dkw;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod pointwise;
pub mod rng;
pub mod sim;

pub use error::{CliError, Result};
