//! Empirical Bernstein confidence sequence for nonnegative, possibly heavy
//! tailed `Y_s = W_s·1{X_s ≤ ρ}` with conditional means in `[0, 1]`.
//!
//! For a candidate mean `m` let `S = ΣY - t·m`, `Y* = min(1, ΣY/t)`,
//! `Q = Σ(Y - Y*)²`, `Reg = 16 + 4√2·√(8 + Q)` and `V = Reg + Q`. The
//! truncated-gamma mixture of `exp(λS - ψ_e(λ)V)` over `λ ∈ [0, 1)` is
//!
//! `M = C(τ)/(τ + V) · ₁F₁(1; V + τ + 1; S + V + τ)`.

use super::{bisect_rejection, budget, Budget, OracleKind, OracleQuery, PointwiseOracle};
use crate::error::{Error, Result};
use crate::math::{exp, ln, ln1p, sqrt, LN_2PI};
use crate::numeric::{log_kummer_1f1_row1_with, log_truncated_gamma_constant, ToleranceConfig};
use crate::stats::{FrozenTailStats, SortedCounts, TailView};

/// Variance process for one candidate mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpBernState {
    /// Centered sum `ΣY - t·m`.
    pub s: f64,
    /// `Reg + Σ(Y - Y*)²`.
    pub v: f64,
    /// Regret inflation `16 + 4√2·√(8 + Σ(Y - Y*)²)`.
    pub reg: f64,
    pub tau: f64,
}

/// `Σ(Y - Y*)²` from first and second moments.
pub fn centered_square_sum(t: u64, sum: f64, sum_sq: f64) -> f64 {
    let tf = t as f64;
    let y_star = (sum / tf).min(1.0);
    (sum_sq - 2.0 * y_star * sum + tf * y_star * y_star).max(0.0)
}

pub fn regret(square_sum: f64) -> f64 {
    16.0 + 4.0 * core::f64::consts::SQRT_2 * sqrt(8.0 + square_sum)
}

impl EmpBernState {
    pub fn new(t: u64, sum: f64, sum_sq: f64, m: f64, tau: f64) -> Self {
        let q = centered_square_sum(t, sum, sum_sq);
        Self::from_square_sum(t, sum, q, m, tau)
    }

    /// Same as [`EmpBernState::new`] with `Σ(Y - Y*)²` supplied directly.
    pub fn from_square_sum(t: u64, sum: f64, square_sum: f64, m: f64, tau: f64) -> Self {
        let reg = regret(square_sum);
        EmpBernState { s: sum - t as f64 * m, v: reg + square_sum, reg, tau }
    }

    /// `ln M` of the conjugate mixture.
    pub fn log_wealth(&self) -> Result<f64> {
        let n = self.tau + self.v;
        let x = self.s + n;
        let lead = log_truncated_gamma_constant(self.tau)? - ln(n);
        if x <= 0.0 {
            // ₁F₁(1; b; x) ≤ 1 for x ≤ 0, so the wealth is below C(τ)/(τ+V) < 1.
            return Ok(lead);
        }
        Ok(lead + log_kummer_1f1_row1_with(n + 1.0, x, &kummer_tolerance(n + 1.0))?)
    }
}

/// Default tolerances with room for the `O(√b)` terms that the series and
/// continued fraction need when `x ≈ b`.
fn kummer_tolerance(b: f64) -> ToleranceConfig {
    let base = ToleranceConfig::default();
    let need = (40.0 * sqrt(b)).min(1e9) as usize;
    ToleranceConfig { max_iter: base.max_iter.max(need), ..base }
}

/// Lower bound on the averaged conditional mean of the summarized process.
pub fn lower_from_moments(
    t: u64,
    sum: f64,
    square_sum: f64,
    delta: f64,
    tau: f64,
) -> Result<f64> {
    let threshold = match budget(t, delta)? {
        Budget::Trivial => return Ok(0.0),
        Budget::Threshold(x) => x,
    };
    let wealth = |m: f64| EmpBernState::from_square_sum(t, sum, square_sum, m, tau).log_wealth();
    if wealth(0.0)? < threshold {
        return Ok(0.0);
    }
    let l = bisect_rejection(0.0, 1.0, true, |m| {
        let w = wealth(m)?;
        debug_assert!(m == 0.0 || w <= wealth(0.0)? + 1e-9 * w.abs().max(1.0));
        Ok(w >= threshold)
    })?;
    Ok(l.clamp(0.0, 1.0))
}

pub fn lower_from_view(view: &TailView<'_>, delta: f64, tau: f64) -> Result<f64> {
    if view.t == 0 {
        return Err(Error::EmptyStream);
    }
    let q = centered_square_sum(view.t, view.sum, view.sum_sq);
    lower_from_moments(view.t, view.sum, q, delta, tau)
}

/// Upper bound from the mean of `Y` and a lower bound `L'` on the complement
/// process `W - Y`: since `E[W] = 1`, `U = 1 - L'`, widened to at least the
/// clipped empirical mean and capped at one.
pub fn upper_from_complement(q_hat_w: f64, complement_lower: f64) -> f64 {
    (1.0 - complement_lower).max(q_hat_w.min(1.0)).min(1.0)
}

pub fn empbern_lower(frozen: &FrozenTailStats, q: &OracleQuery, tau: f64) -> Result<f64> {
    q.validate()?;
    if frozen.t() != q.t {
        return Err(Error::Mismatch("query time differs from stream length"));
    }
    lower_from_view(&frozen.view_le(q.rho), q.delta, tau)
}

pub fn empbern_upper(frozen: &FrozenTailStats, q: &OracleQuery, tau: f64) -> Result<f64> {
    q.validate()?;
    if frozen.t() != q.t {
        return Err(Error::Mismatch("query time differs from stream length"));
    }
    if let Budget::Trivial = budget(q.t, q.delta)? {
        return Ok(1.0);
    }
    let comp = lower_from_view(&frozen.view_gt(q.rho), q.delta, tau)?;
    Ok(upper_from_complement(frozen.view_le(q.rho).mean(), comp))
}

/// Closed-form stitched boundary on `S/t`:
/// `max(C(τ)/t, u)` with `u = (√(2(τ+V) ln Φ) + ln Φ)/t` and
/// `Φ = √((τ+V)/2π)·e^{-1/(12(τ+V)+1)}·(1 + 1/δ)/C(τ)`.
pub fn empbern_stitched_boundary(v: f64, t: u64, tau: f64, delta: f64) -> Result<f64> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::domain("V", v));
    }
    if t == 0 {
        return Err(Error::EmptyStream);
    }
    if !(delta > 0.0) {
        return Err(Error::domain("delta", delta));
    }
    let log_c = log_truncated_gamma_constant(tau)?;
    let n = tau + v;
    let log_phi = 0.5 * (ln(n) - LN_2PI) - 1.0 / (12.0 * n + 1.0) + ln1p(1.0 / delta) - log_c;
    let log_phi = log_phi.max(0.0);
    let tf = t as f64;
    let u = (sqrt(2.0 * n * log_phi) + log_phi) / tf;
    Ok(u.max(exp(log_c) / tf))
}

#[derive(Debug, Clone)]
pub struct EmpBernOracle<'a> {
    frozen: &'a FrozenTailStats,
    tau: f64,
}

impl<'a> EmpBernOracle<'a> {
    pub fn new(frozen: &'a FrozenTailStats, tau: f64) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::Config("tau must be positive"));
        }
        Ok(EmpBernOracle { frozen, tau })
    }
}

impl PointwiseOracle for EmpBernOracle<'_> {
    fn kind(&self) -> OracleKind {
        OracleKind::EmpBern
    }
    fn counts(&self) -> &SortedCounts {
        self.frozen.counts()
    }
    fn lower(&self, rho: f64, delta: f64) -> Result<f64> {
        empbern_lower(self.frozen, &OracleQuery { rho, delta, t: self.frozen.t() }, self.tau)
    }
    fn upper(&self, rho: f64, delta: f64) -> Result<f64> {
        empbern_upper(self.frozen, &OracleQuery { rho, delta, t: self.frozen.t() }, self.tau)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::WeightedStreamStats;
    use proptest::prelude::*;

    /// Smallest centered sum whose mixture wealth reaches `1/δ`.
    fn exact_radius(v: f64, t: u64, tau: f64, delta: f64) -> f64 {
        let target = -libm::log(delta);
        let w = |s: f64| EmpBernState { s, v, reg: 0.0, tau }.log_wealth().unwrap();
        let (mut lo, mut hi) = (0.0, 1.0);
        while w(hi) < target {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if w(mid) >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi / t as f64
    }

    #[test]
    fn stitched_dominates_exact_inversion_reference_point() {
        let stitched = empbern_stitched_boundary(100.0, 1000, 1.0, 0.0025).unwrap();
        let exact = exact_radius(100.0, 1000, 1.0, 0.0025);
        assert!(stitched >= exact, "{stitched} < {exact}");
        assert!(stitched < 2.0 * exact);
    }

    #[test]
    fn state_invariants() {
        let st = EmpBernState::new(10, 4.0, 3.0, 0.2, 1.0);
        assert!(st.reg >= 16.0 && st.v >= st.reg);
        assert!((st.s - 2.0).abs() < 1e-15);
    }

    #[test]
    fn all_unit_weights_stay_below_estimate() {
        let mut ws = WeightedStreamStats::default();
        for i in 0..300 {
            ws.update(1.0, (i as f64 * 0.618_033_988_7) % 1.0).unwrap();
        }
        let f = ws.freeze();
        let q = OracleQuery { rho: 0.5, delta: 0.05, t: 300 };
        let l = empbern_lower(&f, &q, 1.0).unwrap();
        let u = empbern_upper(&f, &q, 1.0).unwrap();
        let q_hat = f.view_le(0.5).mean();
        assert!(l <= q_hat && q_hat <= u, "{l} {q_hat} {u}");
        assert!(l > 0.2 && u < 0.8);
    }

    #[test]
    fn all_mass_below_probe_upper_is_one() {
        let mut ws = WeightedStreamStats::default();
        for _ in 0..100 {
            ws.update(1.0, 0.1).unwrap();
        }
        let f = ws.freeze();
        let q = OracleQuery { rho: 0.5, delta: 0.05, t: 100 };
        assert!(empbern_upper(&f, &q, 1.0).unwrap() >= 1.0 - 1e-12);
    }

    proptest! {
        #[test]
        fn stitched_monotone_in_v(v1 in 0.0f64..1e5, v2 in 0.0f64..1e5, t in 1u64..100_000, delta in 1e-9f64..0.5) {
            let (a, b) = if v1 <= v2 { (v1, v2) } else { (v2, v1) };
            prop_assert!(empbern_stitched_boundary(a, t, 1.0, delta).unwrap()
                <= empbern_stitched_boundary(b, t, 1.0, delta).unwrap());
        }

        #[test]
        fn stitched_dominates_exact(v in 16.0f64..2e4, t in 10u64..100_000, delta in 1e-8f64..0.2, tau in 0.5f64..3.0) {
            let stitched = empbern_stitched_boundary(v, t, tau, delta).unwrap();
            let exact = exact_radius(v, t, tau, delta);
            prop_assert!(stitched >= exact * (1.0 - 1e-9), "{} < {}", stitched, exact);
        }

        #[test]
        fn wealth_nonincreasing_in_mean(
            t in 1u64..500, frac in 0.0f64..1.0, spread in 0.0f64..5.0,
            m1 in 0.0f64..1.0, m2 in 0.0f64..1.0
        ) {
            let sum = frac * t as f64 * 1.5;
            let sum_sq = sum * (1.0 + spread);
            let (a, b) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
            let wa = EmpBernState::new(t, sum, sum_sq, a, 1.0).log_wealth().unwrap();
            let wb = EmpBernState::new(t, sum, sum_sq, b, 1.0).log_wealth().unwrap();
            prop_assert!(wb <= wa + 1e-9 * wa.abs().max(1.0));
        }

        #[test]
        fn monotone_in_budget(t in 1u64..400, frac in 0.0f64..1.2, d1 in 1e-8f64..0.5, d2 in 1e-8f64..0.5) {
            let sum = frac * t as f64;
            let q = centered_square_sum(t, sum, sum * 1.3);
            let (small, big) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(lower_from_moments(t, sum, q, small, 1.0).unwrap()
                <= lower_from_moments(t, sum, q, big, 1.0).unwrap());
        }
    }
}
