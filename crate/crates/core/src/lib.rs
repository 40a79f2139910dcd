//! Streaming, anytime-valid confidence bands for the running average of
//! conditional CDFs.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every piece of the
//! estimator that does not touch IO:
//!
//! * [`numeric`]: log-space special functions (incomplete gamma and beta,
//!   Kummer's `1F1(1; b; x)`, Lambert `W₋₁`) and the small convex transforms
//!   used by the wealth processes.
//! * [`stats`]: exact empirical-CDF counts and the importance-weighted
//!   accumulators with geometric log buckets, plus their frozen prefix/suffix
//!   form and a versioned binary snapshot codec.
//! * [`oracles`]: fixed-value lower/upper confidence sequences
//!   (Beta-Binomial, curved sub-Gaussian, empirical Bernstein, DDRM).
//! * [`bands`]: the depth-refined union bound that turns fixed-value oracles
//!   into bands valid simultaneously over all times and all values.
//! * [`estimator`]: glue that pairs accumulated statistics with an oracle.
//!
//! All wealth arithmetic is carried out in log space.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bands;
pub mod error;
pub mod estimator;
pub(crate) mod math;
pub mod numeric;
pub mod oracles;
pub mod stats;

pub use error::{Error, Result};
