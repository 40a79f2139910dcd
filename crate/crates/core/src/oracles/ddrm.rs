//! Heavy-tailed mixture-of-bets confidence sequence over log-bucketed
//! sufficient statistics.
//!
//! For a bet `λ ∈ (0, 1)` and the clipped running mean `Ŷ* = min(1, ΣY/t)`,
//! the per-bet log wealth at candidate mean `m` is bounded below by
//!
//! `ℓ(λ, m) = λ(tŶ* - tm) + LB(λ) - Reg(λ)`,
//! `Reg(λ) = 4λ²/(1-λ)² + 4λ/(1-λ)·√(λ(ΣY - tŶ*) - LB(λ))`,
//!
//! where `LB(λ)` is the bucketed lower bound on `Σ ln(1 + λ(Y - Ŷ*))`.
//! Bets are mixed with sub-probability weights; the infinite mixture is cut
//! off once the unexplored mass provably cannot change the decision.

use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{bisect_rejection, budget, Budget, OracleKind, OracleQuery, PointwiseOracle};
use crate::error::{Error, Result};
use crate::math::{ln, sqrt, LogSum};
use crate::oracles::empbern::upper_from_complement;
use crate::stats::{FrozenTailStats, SortedCounts, TailView};

/// Number of explicit bets in the default grid.
pub const DEFAULT_BETS: usize = 60;

/// Decreasing bets `λ_j` with mixture weights and a bound on the mass of
/// any further (smaller) bets that were left out.
#[derive(Debug, Clone, PartialEq)]
pub struct BetGrid {
    lambdas: Vec<f64>,
    weights: Vec<f64>,
    /// Upper bound on the total weight of omitted bets, all of which are
    /// assumed no larger than the last explicit bet.
    residual: f64,
    /// `tail_mass[j]` = weight of bets `j..` including the residual.
    tail_mass: Vec<f64>,
}

impl Default for BetGrid {
    /// `λ_j = 2^{-(j+1)}`, `w_j = 6/(π²(j+1)²)`.
    fn default() -> Self {
        let c = 6.0 / (PI * PI);
        let lambdas = (0..DEFAULT_BETS).map(|j| libm::ldexp(1.0, -(j as i32 + 1))).collect();
        let weights: Vec<f64> = (1..=DEFAULT_BETS).map(|n| c / (n * n) as f64).collect();
        // The full series sums to one, so the omitted mass is the remainder.
        let residual = (1.0 - weights.iter().sum::<f64>()).max(0.0);
        BetGrid::new(lambdas, weights, residual).expect("default grid is valid")
    }
}

impl BetGrid {
    pub fn new(lambdas: Vec<f64>, weights: Vec<f64>, residual: f64) -> Result<Self> {
        let mut grid = BetGrid { lambdas, weights, residual, tail_mass: Vec::new() };
        grid.validate()?;
        let n = grid.lambdas.len();
        grid.tail_mass = alloc::vec![0.0; n + 1];
        grid.tail_mass[n] = residual;
        for j in (0..n).rev() {
            grid.tail_mass[j] = grid.tail_mass[j + 1] + grid.weights[j];
        }
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.len() != self.weights.len() || self.lambdas.is_empty() {
            return Err(Error::Config("bet grid needs matching, nonempty lambdas and weights"));
        }
        for w in self.lambdas.windows(2) {
            if !(w[1] < w[0]) {
                return Err(Error::Config("bets must be strictly decreasing"));
            }
        }
        if self.lambdas.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
            return Err(Error::Config("bets must lie in (0, 1)"));
        }
        if self.weights.iter().any(|&w| !(w >= 0.0)) || !(self.residual >= 0.0) {
            return Err(Error::Config("mixture weights must be nonnegative"));
        }
        let total: f64 = self.weights.iter().sum::<f64>() + self.residual;
        if total > 1.0 + 1e-12 {
            return Err(Error::Config("mixture weights exceed one"));
        }
        Ok(())
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }
}

/// Clipped running mean `min(1, ΣY/t)`.
pub fn clipped_mean(t: u64, sum: f64) -> f64 {
    (sum / t as f64).min(1.0)
}

/// `Reg(λ)` given the (lower bound on the) log sum.
pub fn regret(lambda: f64, t: u64, sum: f64, log_sum: f64) -> f64 {
    let y_star = clipped_mean(t, sum);
    let r = lambda / (1.0 - lambda);
    let h_sum = (lambda * (sum - t as f64 * y_star) - log_sum).max(0.0);
    4.0 * r * r + 4.0 * r * sqrt(h_sum)
}

/// `ℓ(λ, m)` from the log sum `Σ ln(1 + λ(Y - Ŷ*))` (exact or bucketed).
pub fn log_wealth_from_log_sum(lambda: f64, t: u64, sum: f64, m: f64, log_sum: f64) -> f64 {
    let tf = t as f64;
    let y_star = clipped_mean(t, sum);
    lambda * tf * (y_star - m) + log_sum - regret(lambda, t, sum, log_sum)
}

/// Bucketed per-bet log wealth.
pub fn log_wealth(view: &TailView<'_>, lambda: f64, m: f64) -> f64 {
    let y_star = clipped_mean(view.t, view.sum);
    let lb = view.log_sum_lower_bound(lambda, y_star);
    log_wealth_from_log_sum(lambda, view.t, view.sum, m, lb)
}

/// Mixture rejection test with lazily evaluated, `m`-independent terms.
struct Mixture<'g> {
    grid: &'g BetGrid,
    t: u64,
    sum: f64,
    /// `ℓ(λ_j, 0)` once computed.
    offsets: Vec<f64>,
}

impl<'g> Mixture<'g> {
    fn new(grid: &'g BetGrid, t: u64, sum: f64) -> Self {
        Mixture { grid, t, sum, offsets: Vec::with_capacity(grid.len()) }
    }

    fn offset(&mut self, j: usize, log_sum: &mut impl FnMut(f64) -> f64) -> f64 {
        while self.offsets.len() <= j {
            let lambda = self.grid.lambdas[self.offsets.len()];
            let ls = log_sum(lambda);
            self.offsets.push(log_wealth_from_log_sum(lambda, self.t, self.sum, 0.0, ls));
        }
        self.offsets[j]
    }

    /// Whether `ln Σ_j w_j e^{ℓ(λ_j, m)} ≥ threshold` is certified.
    fn rejects(
        &mut self,
        m: f64,
        threshold: f64,
        log_sum: &mut impl FnMut(f64) -> f64,
    ) -> bool {
        let tm = self.t as f64 * m;
        // Any bet satisfies ℓ(λ, m) ≤ λ·(ΣY - tm).
        let excess = (self.sum - tm).max(0.0);
        let mut acc = LogSum::new();
        for j in 0..self.grid.len() {
            let rest = self.grid.tail_mass[j];
            if rest <= 0.0 {
                break;
            }
            let optimistic = log_add(acc.value(), ln(rest) + self.grid.lambdas[j] * excess);
            if optimistic < threshold {
                return false;
            }
            let w = self.grid.weights[j];
            if w > 0.0 {
                let lambda = self.grid.lambdas[j];
                acc.add(ln(w) + self.offset(j, log_sum) - lambda * tm);
            }
            if acc.value() >= threshold {
                return true;
            }
        }
        false
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    crate::math::log_add_exp(a, b)
}

/// Lower bound from a tail view.
pub fn lower_from_view(view: &TailView<'_>, delta: f64, grid: &BetGrid) -> Result<f64> {
    let threshold = match budget(view.t, delta)? {
        Budget::Trivial => return Ok(0.0),
        Budget::Threshold(x) => x,
    };
    let y_star = clipped_mean(view.t, view.sum);
    let mut log_sum = |lambda: f64| view.log_sum_lower_bound(lambda, y_star);
    lower_with(view.t, view.sum, threshold, grid, &mut log_sum)
}

/// Lower bound with a caller-supplied `λ ↦ Σ ln(1 + λ(Y - Ŷ*))`.
pub fn lower_with(
    t: u64,
    sum: f64,
    threshold: f64,
    grid: &BetGrid,
    log_sum: &mut impl FnMut(f64) -> f64,
) -> Result<f64> {
    if t == 0 {
        return Err(Error::EmptyStream);
    }
    let mut mix = Mixture::new(grid, t, sum);
    if !mix.rejects(0.0, threshold, log_sum) {
        return Ok(0.0);
    }
    let l = bisect_rejection(0.0, 1.0, true, |m| Ok(mix.rejects(m, threshold, log_sum)))?;
    Ok(l.clamp(0.0, 1.0))
}

pub fn ddrm_lower(frozen: &FrozenTailStats, q: &OracleQuery, grid: &BetGrid) -> Result<f64> {
    q.validate()?;
    if frozen.t() != q.t {
        return Err(Error::Mismatch("query time differs from stream length"));
    }
    lower_from_view(&frozen.view_le(q.rho), q.delta, grid)
}

pub fn ddrm_upper(frozen: &FrozenTailStats, q: &OracleQuery, grid: &BetGrid) -> Result<f64> {
    q.validate()?;
    if frozen.t() != q.t {
        return Err(Error::Mismatch("query time differs from stream length"));
    }
    if let Budget::Trivial = budget(q.t, q.delta)? {
        return Ok(1.0);
    }
    let comp = lower_from_view(&frozen.view_gt(q.rho), q.delta, grid)?;
    Ok(upper_from_complement(frozen.view_le(q.rho).mean(), comp))
}

#[derive(Debug, Clone)]
pub struct DdrmOracle<'a> {
    frozen: &'a FrozenTailStats,
    grid: BetGrid,
}

impl<'a> DdrmOracle<'a> {
    pub fn new(frozen: &'a FrozenTailStats, grid: BetGrid) -> Result<Self> {
        grid.validate()?;
        Ok(DdrmOracle { frozen, grid })
    }
}

impl PointwiseOracle for DdrmOracle<'_> {
    fn kind(&self) -> OracleKind {
        OracleKind::Ddrm
    }
    fn counts(&self) -> &SortedCounts {
        self.frozen.counts()
    }
    fn lower(&self, rho: f64, delta: f64) -> Result<f64> {
        ddrm_lower(self.frozen, &OracleQuery { rho, delta, t: self.frozen.t() }, &self.grid)
    }
    fn upper(&self, rho: f64, delta: f64) -> Result<f64> {
        ddrm_upper(self.frozen, &OracleQuery { rho, delta, t: self.frozen.t() }, &self.grid)
    }
}

/// Brute-force mixture log wealth over the explicit bets, for audits.
pub fn mixture_log_wealth(view: &TailView<'_>, grid: &BetGrid, m: f64) -> f64 {
    let mut acc = LogSum::new();
    for (&l, &w) in grid.lambdas.iter().zip(&grid.weights) {
        if w > 0.0 {
            acc.add(ln(w) + log_wealth(view, l, m));
        }
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::TailSummary;
    use proptest::prelude::*;

    #[test]
    fn default_grid_is_a_subprobability() {
        let g = BetGrid::default();
        let total: f64 = g.weights().iter().sum::<f64>() + g.residual();
        assert!(total <= 1.0 + 1e-12);
        assert_eq!(g.lambdas()[0], 0.5);
        assert!((g.weights()[0] - 6.0 / (PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn all_zero_process_gives_trivial_lower() {
        let s = TailSummary::from_values(0.25, core::iter::repeat_n(0.0, 500)).unwrap();
        assert_eq!(lower_from_view(&s.view(), 0.05, &BetGrid::default()).unwrap(), 0.0);
    }

    #[test]
    fn constant_ones_give_tight_lower() {
        let s = TailSummary::from_values(0.25, core::iter::repeat_n(1.0, 2000)).unwrap();
        let l = lower_from_view(&s.view(), 0.05, &BetGrid::default()).unwrap();
        assert!(l > 0.9 && l <= 1.0, "{l}");
    }

    #[test]
    fn grid_validation() {
        assert!(BetGrid::new(alloc::vec![0.5, 0.6], alloc::vec![0.1, 0.1], 0.0).is_err());
        assert!(BetGrid::new(alloc::vec![0.5], alloc::vec![1.1], 0.0).is_err());
        assert!(BetGrid::new(alloc::vec![1.0], alloc::vec![0.5], 0.0).is_err());
        assert!(BetGrid::new(alloc::vec![0.5, 0.25], alloc::vec![0.5, 0.25], 0.25).is_ok());
    }

    proptest! {
        #[test]
        fn truncated_decision_matches_full_mixture(
            ys in proptest::collection::vec(prop_oneof![Just(0.0), 0.0f64..4.0], 1..150),
            m in 0.0f64..1.0,
            delta in 1e-6f64..0.5,
        ) {
            let s = TailSummary::from_values(0.25, ys.iter().copied()).unwrap();
            let v = s.view();
            let grid = BetGrid::default();
            let threshold = -libm::log(delta);
            let full = mixture_log_wealth(&v, &grid, m);
            let y_star = clipped_mean(v.t, v.sum);
            let mut ls = |l: f64| v.log_sum_lower_bound(l, y_star);
            let mut mix = Mixture::new(&grid, v.t, v.sum);
            let decided = mix.rejects(m, threshold, &mut ls);
            // Rejection must be backed by the explicit mixture, and a clear
            // full-mixture rejection must not be missed.
            if decided {
                prop_assert!(full >= threshold - 1e-9);
            }
            if full >= threshold + 1e-9 {
                prop_assert!(decided);
            }
        }

        #[test]
        fn monotone_in_budget(
            ys in proptest::collection::vec(0.0f64..3.0, 1..120),
            d1 in 1e-8f64..0.5, d2 in 1e-8f64..0.5,
        ) {
            let s = TailSummary::from_values(0.25, ys.iter().copied()).unwrap();
            let (small, big) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            let g = BetGrid::default();
            prop_assert!(lower_from_view(&s.view(), small, &g).unwrap()
                <= lower_from_view(&s.view(), big, &g).unwrap());
        }
    }
}
