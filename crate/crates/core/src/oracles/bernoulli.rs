//! Beta-Binomial mixture confidence sequence for unweighted indicators.
//!
//! For a candidate mean `q` with `n₁` of `t` indicators set, the mixture over
//! alternatives `p ∈ [q, 1]` under a `Beta(bq, b(1-q))` prior has wealth
//!
//! `W(q) = q^{-n₁} (1-q)^{-n₀} · B(q, 1; bq + n₁, b(1-q) + n₀) / B(q, 1; bq, b(1-q))`
//!
//! where `B(lo, hi; a, b)` is the incomplete beta integral over `[lo, hi]`.

use super::{bisect_rejection, budget, Budget, OracleKind, OracleQuery, PointwiseOracle};
use crate::error::{Error, Result};
use crate::math::{ln, ln1p};
use crate::numeric::log_inc_beta;
use crate::stats::SortedCounts;

/// `ln W(q)` for `q ∈ (0, 1)`.
pub fn log_wealth(q: f64, n1: u64, n0: u64, prior_b: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain("q", q));
    }
    let (f1, f0) = (n1 as f64, n0 as f64);
    let mut lw = 0.0;
    if n0 > 0 {
        lw -= f0 * ln1p(-q);
    }
    if n1 > 0 {
        lw -= f1 * ln(q);
    }
    let num = log_inc_beta(q, 1.0, prior_b * q + f1, prior_b * (1.0 - q) + f0)?;
    let den = log_inc_beta(q, 1.0, prior_b * q, prior_b * (1.0 - q))?;
    if num == f64::NEG_INFINITY || !den.is_finite() {
        // Underflowed mass: report no evidence.
        return Ok(f64::NEG_INFINITY);
    }
    Ok(lw + num - den)
}

/// Lower confidence bound from `n1` successes out of `t`.
pub fn lower_from_counts(n1: u64, t: u64, delta: f64, prior_b: f64) -> Result<f64> {
    let threshold = match budget(t, delta)? {
        Budget::Trivial => return Ok(0.0),
        Budget::Threshold(x) => x,
    };
    if n1 > t {
        return Err(Error::Mismatch("successes exceed total"));
    }
    if n1 == 0 {
        return Ok(0.0);
    }
    let n0 = t - n1;
    let q_hat = n1 as f64 / t as f64;
    // W(q) → ∞ as q → 0 whenever n₁ > 0, and W(q̂) ≤ 1.
    let l = bisect_rejection(0.0, q_hat, false, |q| {
        Ok(log_wealth(q, n1, n0, prior_b)? >= threshold)
    })?;
    Ok(l.clamp(0.0, q_hat))
}

/// Upper bound as the mirror of the lower bound on the complement.
pub fn upper_from_counts(n1: u64, t: u64, delta: f64, prior_b: f64) -> Result<f64> {
    if n1 > t {
        return Err(Error::Mismatch("successes exceed total"));
    }
    Ok(1.0 - lower_from_counts(t - n1, t, delta, prior_b)?)
}

fn check_total(counts: &SortedCounts, q: &OracleQuery) -> Result<()> {
    q.validate()?;
    if counts.total() != q.t {
        return Err(Error::Mismatch("query time differs from stream length"));
    }
    Ok(())
}

pub fn bernoulli_lower(counts: &SortedCounts, q: &OracleQuery, prior_b: f64) -> Result<f64> {
    check_total(counts, q)?;
    lower_from_counts(counts.count_le(q.rho), q.t, q.delta, prior_b)
}

pub fn bernoulli_upper(counts: &SortedCounts, q: &OracleQuery, prior_b: f64) -> Result<f64> {
    check_total(counts, q)?;
    upper_from_counts(counts.count_le(q.rho), q.t, q.delta, prior_b)
}

#[derive(Debug, Clone)]
pub struct BernoulliOracle<'a> {
    counts: &'a SortedCounts,
    prior_b: f64,
}

impl<'a> BernoulliOracle<'a> {
    pub fn new(counts: &'a SortedCounts, prior_b: f64) -> Result<Self> {
        if !(prior_b > 0.0) || !prior_b.is_finite() {
            return Err(Error::Config("prior_b must be positive"));
        }
        Ok(BernoulliOracle { counts, prior_b })
    }
}

impl PointwiseOracle for BernoulliOracle<'_> {
    fn kind(&self) -> OracleKind {
        OracleKind::Bernoulli
    }
    fn counts(&self) -> &SortedCounts {
        self.counts
    }
    fn lower(&self, rho: f64, delta: f64) -> Result<f64> {
        bernoulli_lower(self.counts, &OracleQuery { rho, delta, t: self.counts.total() }, self.prior_b)
    }
    fn upper(&self, rho: f64, delta: f64) -> Result<f64> {
        bernoulli_upper(self.counts, &OracleQuery { rho, delta, t: self.counts.total() }, self.prior_b)
    }
}
