//! Fixed-value confidence sequences for the averaged conditional mean of a
//! thresholded (possibly importance-weighted) indicator.
//!
//! Every oracle answers `lower(ρ, δ)` and `upper(ρ, δ)` with values in
//! `[0, 1]`, valid simultaneously over time with probability `1 - δ`, and
//! is monotone in `δ`: a smaller budget never yields a tighter bound.

pub mod bernoulli;
pub mod ddrm;
pub mod empbern;
pub mod subgaussian;

use core::fmt;
use core::str::FromStr;

pub use bernoulli::BernoulliOracle;
pub use ddrm::{BetGrid, DdrmOracle};
pub use empbern::{empbern_stitched_boundary, EmpBernOracle, EmpBernState};
pub use subgaussian::SubGaussianOracle;

use crate::error::{Error, Result};
use crate::math::ln;
use crate::numeric::kearns_saul;
use crate::stats::{FrozenTailStats, SortedCounts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OracleKind {
    Bernoulli,
    SubGaussian,
    EmpBern,
    Ddrm,
}

impl OracleKind {
    pub const ALL: [OracleKind; 4] =
        [OracleKind::Bernoulli, OracleKind::SubGaussian, OracleKind::EmpBern, OracleKind::Ddrm];

    pub fn name(self) -> &'static str {
        match self {
            OracleKind::Bernoulli => "bernoulli",
            OracleKind::SubGaussian => "subgaussian",
            OracleKind::EmpBern => "empbern",
            OracleKind::Ddrm => "ddrm",
        }
    }

    /// Whether the oracle consumes importance weights.
    pub fn is_weighted(self) -> bool {
        matches!(self, OracleKind::EmpBern | OracleKind::Ddrm)
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OracleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        OracleKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or(Error::Config("unknown oracle kind"))
    }
}

/// One pointwise request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleQuery {
    pub rho: f64,
    pub delta: f64,
    pub t: u64,
}

impl OracleQuery {
    pub fn new(rho: f64, delta: f64, t: u64) -> Result<Self> {
        let q = OracleQuery { rho, delta, t };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(Error::EmptyStream);
        }
        if self.rho.is_nan() {
            return Err(Error::NonFinite { what: "rho" });
        }
        if self.delta.is_nan() {
            return Err(Error::NonFinite { what: "delta" });
        }
        Ok(())
    }
}

/// Hyperparameters shared by the oracle family.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    /// Beta-Binomial prior strength.
    pub prior_b: f64,
    /// Mixture scale for the sub-Gaussian and empirical Bernstein boundaries.
    pub tau: f64,
    pub grid: BetGrid,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { prior_b: 1.0, tau: 1.0, grid: BetGrid::default() }
    }
}

impl OracleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.prior_b > 0.0) || !self.prior_b.is_finite() {
            return Err(Error::Config("prior_b must be positive"));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::Config("tau must be positive"));
        }
        self.grid.validate()
    }
}

/// A pointwise confidence sequence bound to one frozen snapshot.
pub trait PointwiseOracle {
    fn kind(&self) -> OracleKind;

    /// Exact counts of the snapshot, used for early termination.
    fn counts(&self) -> &SortedCounts;

    fn t(&self) -> u64 {
        self.counts().total()
    }

    /// Lower confidence bound on the averaged CDF at `rho`.
    fn lower(&self, rho: f64, delta: f64) -> Result<f64>;

    /// Upper confidence bound on the averaged CDF at `rho`.
    fn upper(&self, rho: f64, delta: f64) -> Result<f64>;
}

impl<O: PointwiseOracle + ?Sized> PointwiseOracle for &O {
    fn kind(&self) -> OracleKind {
        (**self).kind()
    }
    fn counts(&self) -> &SortedCounts {
        (**self).counts()
    }
    fn lower(&self, rho: f64, delta: f64) -> Result<f64> {
        (**self).lower(rho, delta)
    }
    fn upper(&self, rho: f64, delta: f64) -> Result<f64> {
        (**self).upper(rho, delta)
    }
}

/// How a query should be answered before any wealth is evaluated.
pub(crate) enum Budget {
    /// `δ ≥ 1`, or a budget so small that nothing can be certified.
    Trivial,
    /// `ln(1/δ)`.
    Threshold(f64),
}

pub(crate) fn budget(t: u64, delta: f64) -> Result<Budget> {
    if t == 0 {
        return Err(Error::EmptyStream);
    }
    if delta.is_nan() {
        return Err(Error::NonFinite { what: "delta" });
    }
    if delta >= 1.0 || !(delta > 0.0) {
        return Ok(Budget::Trivial);
    }
    let threshold = -ln(delta);
    if !threshold.is_finite() {
        return Ok(Budget::Trivial);
    }
    Ok(Budget::Threshold(threshold))
}

/// Width of the final bracket in wealth inversions.
pub const BISECTION_WIDTH: f64 = 5e-10;
/// Hard cap on bisection steps.
pub const BISECTION_MAX_STEPS: usize = 60;

/// Largest certified-rejected point of `[lo, hi]` for a rejection region
/// that is an initial segment. `lo` is assumed rejected. `hi` is assumed
/// not rejected unless `check_hi`, in which case it is tested first.
///
/// The bracket sequence depends only on `(lo, hi)`, so for predicates that
/// grow with the budget the result is exactly monotone in the budget.
pub fn bisect_rejection(
    lo: f64,
    hi: f64,
    check_hi: bool,
    mut reject: impl FnMut(f64) -> Result<bool>,
) -> Result<f64> {
    if !(hi > lo) {
        return Ok(lo);
    }
    if check_hi && reject(hi)? {
        return Ok(hi);
    }
    let (mut a, mut b) = (lo, hi);
    let mut width = b - a;
    let mut steps = 0;
    while width > BISECTION_WIDTH && steps < BISECTION_MAX_STEPS {
        let mid = a + 0.5 * (b - a);
        if reject(mid)? {
            a = mid;
        } else {
            b = mid;
        }
        width *= 0.5;
        steps += 1;
    }
    Ok(a)
}

/// Reporting-only diagnostics attached to a band evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WidthDiagnostics {
    /// Realized weight drift `t⁻¹ Σ (W_s - 1)`.
    pub drift: f64,
    /// Kearns–Saul factor at the returned bound (zero at the endpoints).
    pub kearns_saul: f64,
    pub depth_used: u32,
}

impl WidthDiagnostics {
    pub fn new(frozen: Option<&FrozenTailStats>, bound: f64, depth_used: u32) -> Self {
        let drift = frozen.map_or(0.0, |f| {
            if f.t() == 0 {
                0.0
            } else {
                (f.total_weight() - f.t() as f64) / f.t() as f64
            }
        });
        WidthDiagnostics {
            drift,
            kearns_saul: kearns_saul(bound).unwrap_or(0.0),
            depth_used,
        }
    }
}
