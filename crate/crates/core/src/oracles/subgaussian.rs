//! Curved sub-Gaussian boundary with the Kearns–Saul variance proxy.
//!
//! A candidate `p` survives at time `t` when
//! `p - q̂ ≤ M(t; p)/t` with
//! `M(t; p) = √(2(tK(p) + τ) ln(√((tK(p) + τ)/τ) / (2δ) + 1))`.

use alloc::vec::Vec;

use super::{budget, Budget, OracleKind, OracleQuery, PointwiseOracle};
use crate::error::{Error, Result};
use crate::math::{ln, ln1p, sqrt};
use crate::numeric::kearns_saul_closed;
use crate::stats::SortedCounts;

/// Width below which an undecided cell is reported by its right end.
pub const SEARCH_WIDTH: f64 = 1e-10;

/// `M(t; p, τ)` with the budget entering through `1/δ`.
pub fn boundary(t: f64, p: f64, tau: f64, delta: f64) -> f64 {
    boundary_with_k(t, kearns_saul_closed(p), tau, delta)
}

fn boundary_with_k(t: f64, k: f64, tau: f64, delta: f64) -> f64 {
    let v = t * k + tau;
    let inner = sqrt(v / tau) / (2.0 * delta);
    // ln(x + 1) without overflow for tiny δ.
    let log_term = if inner < 1e300 { ln1p(inner) } else { ln(inner) };
    sqrt(2.0 * v * log_term)
}

/// Upper bound from `n1` indicators out of `t`: the largest `p ∈ [q̂, 1]`
/// with `p - q̂ - M(t; p)/t ≤ 0`. Because `K` is not monotone the crossing
/// set may be disconnected; the search certifies every point to the right
/// of the answer with a cellwise lower bound of the crossing function.
pub fn upper_from_counts(n1: u64, t: u64, delta: f64, tau: f64) -> Result<f64> {
    let delta = match budget(t, delta)? {
        Budget::Trivial => return Ok(1.0),
        Budget::Threshold(_) => delta,
    };
    if n1 > t {
        return Err(Error::Mismatch("successes exceed total"));
    }
    let tf = t as f64;
    let q_hat = n1 as f64 / tf;
    let g = |p: f64| p - q_hat - boundary(tf, p, tau, delta) / tf;
    if g(1.0) <= 0.0 {
        return Ok(1.0);
    }
    // Right-first depth-first search over dyadic cells of [q̂, 1].
    let mut stack: Vec<(f64, f64)> = Vec::with_capacity(128);
    stack.push((q_hat, 1.0));
    while let Some((a, b)) = stack.pop() {
        // On [a, b]: g(p) ≥ a - q̂ - M(t; K_max)/t, K peaks at 1/2.
        let k_max = kearns_saul_closed(0.5f64.clamp(a, b));
        let lower = a - q_hat - boundary_with_k(tf, k_max, tau, delta) / tf;
        if lower > 0.0 {
            continue;
        }
        if g(b) <= 0.0 || b - a <= SEARCH_WIDTH {
            return Ok(b);
        }
        let mid = a + 0.5 * (b - a);
        stack.push((a, mid));
        stack.push((mid, b));
    }
    // Only reachable if every cell was excluded, which g(q̂) ≤ 0 rules out.
    Ok(q_hat)
}

pub fn lower_from_counts(n1: u64, t: u64, delta: f64, tau: f64) -> Result<f64> {
    if n1 > t {
        return Err(Error::Mismatch("successes exceed total"));
    }
    Ok(1.0 - upper_from_counts(t - n1, t, delta, tau)?)
}

fn check_total(counts: &SortedCounts, q: &OracleQuery) -> Result<()> {
    q.validate()?;
    if counts.total() != q.t {
        return Err(Error::Mismatch("query time differs from stream length"));
    }
    Ok(())
}

pub fn subgaussian_upper(counts: &SortedCounts, q: &OracleQuery, tau: f64) -> Result<f64> {
    check_total(counts, q)?;
    upper_from_counts(counts.count_le(q.rho), q.t, q.delta, tau)
}

pub fn subgaussian_lower(counts: &SortedCounts, q: &OracleQuery, tau: f64) -> Result<f64> {
    check_total(counts, q)?;
    lower_from_counts(counts.count_le(q.rho), q.t, q.delta, tau)
}

#[derive(Debug, Clone)]
pub struct SubGaussianOracle<'a> {
    counts: &'a SortedCounts,
    tau: f64,
}

impl<'a> SubGaussianOracle<'a> {
    pub fn new(counts: &'a SortedCounts, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Config("tau must be positive"));
        }
        Ok(SubGaussianOracle { counts, tau })
    }
}

impl PointwiseOracle for SubGaussianOracle<'_> {
    fn kind(&self) -> OracleKind {
        OracleKind::SubGaussian
    }
    fn counts(&self) -> &SortedCounts {
        self.counts
    }
    fn lower(&self, rho: f64, delta: f64) -> Result<f64> {
        subgaussian_lower(self.counts, &OracleQuery { rho, delta, t: self.counts.total() }, self.tau)
    }
    fn upper(&self, rho: f64, delta: f64) -> Result<f64> {
        subgaussian_upper(self.counts, &OracleQuery { rho, delta, t: self.counts.total() }, self.tau)
    }
}
