//! Trajectory-wise coverage of a single fixed-value oracle.
//!
//! Statistics for the one threshold `ρ` are maintained incrementally, so the
//! bounds can be recomputed after every observation at `O(1)` amortized cost
//! in the stream length.

use cdfband_core::oracles::{
    bernoulli, ddrm, empbern, subgaussian, BetGrid, OracleConfig, OracleKind,
};
use cdfband_core::stats::{BucketAcc, LogApproxBuckets, TailView, DEFAULT_GRANULARITY};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::rng::{replicate_seed, stream_rng, STREAM_DATA, STREAM_WEIGHTS};
use crate::sim::WeightLaw;

/// Incremental sufficient statistics of one nonnegative process.
#[derive(Debug, Clone)]
struct TailAcc {
    t: u64,
    sum: f64,
    sum_sq: f64,
    max: f64,
    buckets: LogApproxBuckets,
    scratch: Vec<(i32, BucketAcc)>,
}

impl TailAcc {
    fn new() -> Result<Self> {
        Ok(TailAcc {
            t: 0,
            sum: 0.0,
            sum_sq: 0.0,
            max: 0.0,
            buckets: LogApproxBuckets::new(DEFAULT_GRANULARITY)?,
            scratch: Vec::new(),
        })
    }

    fn push(&mut self, y: f64) -> Result<()> {
        self.buckets.insert(y)?;
        self.t += 1;
        self.sum += y;
        self.sum_sq += y * y;
        self.max = self.max.max(y);
        Ok(())
    }

    /// Upper bound on `Σ ln(1 + λ(Y_s - ŷ))` from `ln(1 + x) ≤ x - x²/(2(1 + c))`,
    /// valid for `-1 < x ≤ c` with `c ≥ 0`.
    fn log_sum_upper_bound(&self, lambda: f64, y_hat: f64) -> f64 {
        let tf = self.t as f64;
        let lin = lambda * (self.sum - tf * y_hat);
        let sq = (self.sum_sq - 2.0 * y_hat * self.sum + tf * y_hat * y_hat).max(0.0);
        let c = (lambda * (self.max - y_hat)).max(0.0);
        lin - lambda * lambda * sq / (2.0 * (1.0 + c))
    }

    /// Upper bound on the DDRM mixture log wealth at `m`, in `O(1)` per bet.
    /// Wealth grows with the log sum, so an upper bound on the log sum
    /// bounds every bet's wealth from above.
    fn ddrm_wealth_upper_bound(&self, grid: &BetGrid, m: f64) -> f64 {
        let y_hat = ddrm::clipped_mean(self.t, self.sum);
        let mut acc = f64::NEG_INFINITY;
        for (&lambda, &w) in grid.lambdas().iter().zip(grid.weights()) {
            if w > 0.0 {
                let ls = self.log_sum_upper_bound(lambda, y_hat);
                let term = w.ln() + ddrm::log_wealth_from_log_sum(lambda, self.t, self.sum, m, ls);
                acc = log_add_exp(acc, term);
            }
        }
        acc
    }

    fn view(&mut self) -> TailView<'_> {
        self.scratch.clear();
        self.scratch.extend(self.buckets.buckets());
        TailView {
            t: self.t,
            positive: self.buckets.positive_count(),
            sum: self.sum,
            sum_sq: self.sum_sq,
            k: self.buckets.k(),
            buckets: &self.scratch,
        }
    }
}

/// Running state of one oracle at one threshold.
#[derive(Debug, Clone)]
pub struct PointTracker {
    kind: OracleKind,
    config: OracleConfig,
    rho: f64,
    t: u64,
    n_le: u64,
    le: TailAcc,
    gt: TailAcc,
}

impl PointTracker {
    pub fn new(kind: OracleKind, config: OracleConfig, rho: f64) -> Result<Self> {
        config.validate()?;
        if !rho.is_finite() {
            return Err(CliError::config("rho must be finite"));
        }
        Ok(PointTracker { kind, config, rho, t: 0, n_le: 0, le: TailAcc::new()?, gt: TailAcc::new()? })
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn update(&mut self, w: f64, x: f64) -> Result<()> {
        if !self.kind.is_weighted() && w != 1.0 {
            return Err(CliError::config("unweighted oracles take unit weights"));
        }
        if !(w >= 0.0) || !w.is_finite() || !x.is_finite() {
            return Err(CliError::config("observation must be finite with a nonnegative weight"));
        }
        self.t += 1;
        let below = x <= self.rho;
        if below {
            self.n_le += 1;
        }
        if self.kind.is_weighted() {
            let (y_le, y_gt) = if below { (w, 0.0) } else { (0.0, w) };
            self.le.push(y_le)?;
            self.gt.push(y_gt)?;
        }
        Ok(())
    }

    /// `(lower, upper)`, each at level `delta`.
    pub fn bounds(&mut self, delta: f64) -> Result<(f64, f64)> {
        let (t, n) = (self.t, self.n_le);
        let cfg = &self.config;
        Ok(match self.kind {
            OracleKind::Bernoulli => (
                bernoulli::lower_from_counts(n, t, delta, cfg.prior_b)?,
                bernoulli::upper_from_counts(n, t, delta, cfg.prior_b)?,
            ),
            OracleKind::SubGaussian => (
                subgaussian::lower_from_counts(n, t, delta, cfg.tau)?,
                subgaussian::upper_from_counts(n, t, delta, cfg.tau)?,
            ),
            OracleKind::EmpBern => {
                let tau = cfg.tau;
                let lo = empbern::lower_from_view(&self.le.view(), delta, tau)?;
                let mean = self.le.sum / t as f64;
                let comp = empbern::lower_from_view(&self.gt.view(), delta, tau)?;
                (lo, trivial_or(delta, empbern::upper_from_complement(mean, comp)))
            }
            OracleKind::Ddrm => {
                let lo = ddrm::lower_from_view(&self.le.view(), delta, &cfg.grid)?;
                let mean = self.le.sum / t as f64;
                let comp = ddrm::lower_from_view(&self.gt.view(), delta, &cfg.grid)?;
                (lo, trivial_or(delta, empbern::upper_from_complement(mean, comp)))
            }
        })
    }
}

impl PointTracker {
    /// Whether `L_t ≤ truth ≤ U_t` with each side at level `delta`.
    ///
    /// For DDRM every bet's log wealth is decreasing in the candidate mean,
    /// so `L_t > truth` requires the mixture to reject `truth` (and
    /// `U_t < truth` requires the complement mixture to reject `1 - truth`).
    /// When an upper bound on those two wealths stays below the threshold
    /// the bounds cannot exclude `truth` and are not computed; otherwise the
    /// verdict comes from the bounds themselves.
    pub fn covers(&mut self, truth: f64, delta: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&truth) {
            return Ok(false);
        }
        if self.kind == OracleKind::Ddrm && delta > 0.0 && delta < 1.0 {
            let threshold = -delta.ln();
            let slack = 1e-9 * threshold.max(1.0);
            let grid = &self.config.grid;
            let lo_hit = self.le.ddrm_wealth_upper_bound(grid, truth) >= threshold - slack;
            let hi_hit = self.gt.ddrm_wealth_upper_bound(grid, 1.0 - truth) >= threshold - slack;
            if !lo_hit && !hi_hit {
                return Ok(true);
            }
        }
        let (lo, hi) = self.bounds(delta)?;
        Ok(lo <= truth && truth <= hi)
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

fn trivial_or(delta: f64, upper: f64) -> f64 {
    if delta >= 1.0 {
        1.0
    } else {
        upper
    }
}

/// Bernoulli-valued stream with optional independent weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointwiseSpec {
    pub oracle: OracleKind,
    /// `P(X = 1)`; values are `0` or `1`.
    pub p: f64,
    pub rho: f64,
    /// Total level, split evenly between the two sides.
    pub delta: f64,
    pub horizon: u64,
    pub n_seeds: u64,
    pub base_seed: u64,
    /// Weight law for weighted oracles.
    pub weights: WeightLaw,
}

impl PointwiseSpec {
    /// `P(X ≤ ρ)`, which is also `E[W·1{X ≤ ρ}]` for independent weights.
    pub fn truth(&self) -> f64 {
        let mut f = 0.0;
        if self.rho >= 0.0 {
            f += 1.0 - self.p;
        }
        if self.rho >= 1.0 {
            f += self.p;
        }
        f
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointwiseOutcome {
    /// Whether `L_t ≤ truth ≤ U_t` failed at some `t ≤ horizon`.
    pub miscovered: bool,
    /// `(U_T - L_T)/2` at the horizon.
    pub final_radius: f64,
}

pub fn run_pointwise_replicate(spec: &PointwiseSpec, replicate: u64) -> Result<PointwiseOutcome> {
    let seed = replicate_seed(spec.base_seed, replicate);
    let mut xs = stream_rng(seed, STREAM_DATA);
    let mut ws = stream_rng(seed, STREAM_WEIGHTS);
    let mut tracker = PointTracker::new(spec.oracle, OracleConfig::default(), spec.rho)?;
    let truth = spec.truth();
    let side = spec.delta / 2.0;
    let mut miscovered = false;
    for _ in 0..spec.horizon {
        let x = if xs.random::<f64>() < spec.p { 1.0 } else { 0.0 };
        let w = if spec.oracle.is_weighted() { spec.weights.sample(&mut ws) } else { 1.0 };
        tracker.update(w, x)?;
        if !miscovered && !tracker.covers(truth, side)? {
            miscovered = true;
        }
    }
    let (lo, hi) = if tracker.t() == 0 { (0.0, 1.0) } else { tracker.bounds(side)? };
    Ok(PointwiseOutcome { miscovered, final_radius: 0.5 * (hi - lo) })
}

pub fn pointwise_coverage(spec: &PointwiseSpec) -> Result<Vec<PointwiseOutcome>> {
    if !(spec.p >= 0.0 && spec.p <= 1.0) {
        return Err(CliError::config("p must lie in [0, 1]"));
    }
    (0..spec.n_seeds)
        .into_par_iter()
        .map(|i| run_pointwise_replicate(spec, i))
        .collect()
}
