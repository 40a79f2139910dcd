//! Value-uniform bands from fixed-value oracles.
//!
//! At depth `d` the probe grid has spacing `η^{-d}`. The upper bound at `v`
//! queries the nearest grid point at or above `v` with a budget that shrinks
//! with depth, keeps the running minimum, and stops as soon as no sample
//! lies strictly between `v` and the grid point: deeper queries see the same
//! counts with a smaller budget, so they cannot improve the bound. The
//! lower bound mirrors this with the grid point at or below `v`.
//!
//! Unit-interval grids spend `α/η^{2d}` per point (`η^d` points per side and
//! depth). Real-line grids index points by `k ∈ ℤ` and spend
//! `(α/2^d)·3/((π²-3)(1+|k|)²)`, which sums to `α` over all `d ≥ 1`, `k ∈ ℤ`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::cell::RefCell;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::math::{ceil, floor};
use crate::oracles::{OracleKind, PointwiseOracle};
use crate::stats::SortedCounts;

/// Largest depth queried; beyond it every unit-interval budget underflows.
pub const DEFAULT_MAX_DEPTH: u32 = 1000;

/// Grid refinement schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthSchedule {
    eta: u32,
    max_depth: u32,
}

impl Default for DepthSchedule {
    fn default() -> Self {
        DepthSchedule { eta: 2, max_depth: DEFAULT_MAX_DEPTH }
    }
}

impl DepthSchedule {
    pub fn new(eta: u32) -> Result<Self> {
        if eta < 2 {
            return Err(Error::Config("eta must be at least 2"));
        }
        // Keep η^d finite.
        let max_depth = (1000.0 * core::f64::consts::LN_2 / libm::log(eta as f64)) as u32;
        Ok(DepthSchedule { eta, max_depth })
    }

    pub fn with_max_depth(mut self, max_depth: u32) -> Self {
        self.max_depth = max_depth.clamp(1, self.max_depth.max(1));
        self
    }

    pub fn eta(&self) -> u32 {
        self.eta
    }

    pub fn max_depth(&self) -> u32 {
        self.max_depth
    }

    /// `η^d`, the number of grid cells at depth `d`.
    pub fn cells(&self, d: u32) -> f64 {
        if self.eta == 2 {
            libm::ldexp(1.0, d as i32)
        } else {
            libm::pow(self.eta as f64, d as f64)
        }
    }

    /// `η^{-d}`.
    pub fn spacing(&self, d: u32) -> f64 {
        1.0 / self.cells(d)
    }

    /// Per-point budget on the unit interval: `α/η^{2d}`.
    pub fn unit_budget(&self, alpha: f64, d: u32) -> f64 {
        let c = self.cells(d);
        alpha / c / c
    }

    /// Per-point budget on the real line for grid index `k`.
    pub fn real_line_budget(&self, alpha: f64, d: u32, k: f64) -> f64 {
        let depth = libm::ldexp(alpha, -(d as i32));
        let one_k = 1.0 + k.abs();
        depth * 3.0 / ((PI * PI - 3.0) * one_k * one_k)
    }

    /// Sum of all unit-interval budgets on one side: `α/(η-1)`.
    pub fn unit_total(&self, alpha: f64) -> f64 {
        alpha / (self.eta as f64 - 1.0)
    }
}

/// Extra search beyond the early-termination depth (for audits).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchOptions {
    pub extra_depths: u32,
}

/// Result for one side of one probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSide {
    pub value: f64,
    /// Depth at which the termination test fired (`None` if the depth cap
    /// was reached first or the answer was immediate).
    pub depth_terminated: Option<u32>,
    /// Depth whose oracle value was returned (`0` for the trivial value).
    pub depth_used: u32,
    /// Sum of the budgets of every query made.
    pub budget_spent: f64,
    pub queries: u32,
}

impl BandSide {
    fn trivial(value: f64) -> Self {
        BandSide { value, depth_terminated: None, depth_used: 0, budget_spent: 0.0, queries: 0 }
    }
}

/// Which grid family a query uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BandVariant {
    UnitInterval,
    RealLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Side {
    Upper,
    Lower,
}

/// Memo of oracle answers keyed by grid point, for reuse across probes of
/// one curve. Only valid for a fixed oracle, total budget and variant.
#[derive(Debug, Default)]
pub struct QueryCache {
    map: RefCell<BTreeMap<(Side, u32, u64), f64>>,
}

impl QueryCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn get_or(&self, key: (Side, u32, u64), f: impl FnOnce() -> Result<f64>) -> Result<f64> {
        if let Some(v) = self.map.borrow().get(&key) {
            return Ok(*v);
        }
        let v = f()?;
        self.map.borrow_mut().insert(key, v);
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.map.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.borrow().is_empty()
    }
}

struct Query<'a, O: ?Sized> {
    oracle: &'a O,
    alpha: f64,
    schedule: DepthSchedule,
    opts: SearchOptions,
    cache: Option<&'a QueryCache>,
}

impl<O: PointwiseOracle + ?Sized> Query<'_, O> {
    fn ask(&self, side: Side, d: u32, k: f64, rho: f64, delta: f64) -> Result<f64> {
        let run = || match side {
            Side::Upper => self.oracle.upper(rho, delta),
            Side::Lower => self.oracle.lower(rho, delta),
        };
        match self.cache {
            Some(c) => c.get_or((side, d, k.to_bits()), run),
            None => run(),
        }
    }

    /// Shared depth loop. `grid(d)` returns `(k, ρ_d, δ_d)`; `done(ρ)`
    /// is the termination test.
    fn search(
        &self,
        side: Side,
        mut grid: impl FnMut(u32) -> (f64, f64, f64),
        done: impl Fn(f64) -> bool,
    ) -> Result<BandSide> {
        let better = |new: f64, cur: f64| match side {
            Side::Upper => new < cur,
            Side::Lower => new > cur,
        };
        let mut out = BandSide::trivial(match side {
            Side::Upper => 1.0,
            Side::Lower => 0.0,
        });
        let mut stop_at = self.schedule.max_depth;
        for d in 1..=self.schedule.max_depth {
            if d > stop_at {
                break;
            }
            let (k, rho, delta) = grid(d);
            let b = self.ask(side, d, k, rho, delta)?;
            out.queries += 1;
            out.budget_spent += delta;
            if better(b, out.value) {
                out.value = b;
                out.depth_used = d;
            }
            if out.depth_terminated.is_none() && done(rho) {
                out.depth_terminated = Some(d);
                stop_at = d.saturating_add(self.opts.extra_depths);
            }
        }
        Ok(out)
    }

    /// First depth after `after` at which `v` is itself a grid point, if any.
    fn exact_depth(&self, v: f64, after: u32) -> Option<u32> {
        ((after + 1)..=self.schedule.max_depth).find(|&d| {
            let x = v * self.schedule.cells(d);
            x.is_finite() && floor(x) == x
        })
    }

    /// When the lower search stops with samples sitting exactly at `v`, the
    /// grid point `v` at a deeper level sees strictly more mass at or below
    /// it; query it once so that no deeper level can do better.
    fn refine_lower(
        &self,
        mut out: BandSide,
        v: f64,
        counts: &SortedCounts,
        budget_at: impl Fn(u32, f64) -> Option<f64>,
    ) -> Result<BandSide> {
        let Some(term) = out.depth_terminated else {
            return Ok(out);
        };
        if counts.count_le(v) == counts.count_lt(v) {
            return Ok(out);
        }
        let searched = term.saturating_add(self.opts.extra_depths);
        let Some(d) = self.exact_depth(v, 0) else {
            return Ok(out);
        };
        if d <= searched {
            return Ok(out);
        }
        let k = v * self.schedule.cells(d);
        let Some(delta) = budget_at(d, k) else {
            return Ok(out);
        };
        let b = self.ask(Side::Lower, d, k, v, delta)?;
        out.queries += 1;
        out.budget_spent += delta;
        if b > out.value {
            out.value = b;
            out.depth_used = d;
        }
        Ok(out)
    }

    fn upper_unit(&self, v: f64) -> Result<BandSide> {
        if v > 1.0 {
            return Ok(BandSide::trivial(1.0));
        }
        let v = v.max(0.0);
        let counts = self.oracle.counts();
        let s = self.schedule;
        self.search(
            Side::Upper,
            |d| {
                let n = s.cells(d);
                let k = ceil(n * v).max(1.0);
                (k, k / n, s.unit_budget(self.alpha, d))
            },
            |rho| counts.count_in(v, rho) == 0,
        )
    }

    fn lower_unit(&self, v: f64) -> Result<BandSide> {
        if v < 0.0 {
            return Ok(BandSide::trivial(0.0));
        }
        let v = v.min(1.0);
        let counts = self.oracle.counts();
        let s = self.schedule;
        let out = self.search(
            Side::Lower,
            |d| {
                let n = s.cells(d);
                let k = floor(n * v).min(n - 1.0);
                (k, k / n, s.unit_budget(self.alpha, d))
            },
            |rho| counts.count_in_closed_open(rho, v) == 0,
        )?;
        self.refine_lower(out, v, counts, |d, k| {
            (k <= s.cells(d) - 1.0).then(|| s.unit_budget(self.alpha, d))
        })
    }

    fn upper_real_line(&self, v: f64) -> Result<BandSide> {
        if !v.is_finite() {
            return if v > 0.0 { Ok(BandSide::trivial(1.0)) } else { Err(Error::NonFinite { what: "v" }) };
        }
        let counts = self.oracle.counts();
        let s = self.schedule;
        self.search(
            Side::Upper,
            |d| {
                let n = s.cells(d);
                let mut k = ceil(n * v);
                if k < 0.0 {
                    k = shift_up(counts, k, n);
                }
                (k, k / n, s.real_line_budget(self.alpha, d, k))
            },
            |rho| counts.count_in(v, rho) == 0,
        )
    }

    fn lower_real_line(&self, v: f64) -> Result<BandSide> {
        if !v.is_finite() {
            return if v < 0.0 { Ok(BandSide::trivial(0.0)) } else { Err(Error::NonFinite { what: "v" }) };
        }
        let counts = self.oracle.counts();
        let s = self.schedule;
        let out = self.search(
            Side::Lower,
            |d| {
                let n = s.cells(d);
                let mut k = floor(n * v);
                if k > 0.0 {
                    k = shift_down(counts, k, n);
                }
                (k, k / n, s.real_line_budget(self.alpha, d, k))
            },
            |rho| counts.count_in_closed_open(rho, v) == 0,
        )?;
        self.refine_lower(out, v, counts, |d, k| Some(s.real_line_budget(self.alpha, d, k)))
    }
}

/// Unit steps in `k` are representable only below `2^52`.
fn exact_index_range(k: f64, x: Option<f64>, n: f64) -> bool {
    const LIMIT: f64 = 4_503_599_627_370_496.0;
    k.abs() < LIMIT && x.is_none_or(|x| (x * n).abs() < LIMIT)
}

/// Moves a negative upper grid index toward the origin while the number of
/// samples at or below the grid point is unchanged.
fn shift_up(counts: &SortedCounts, k: f64, n: f64) -> f64 {
    let rho = k / n;
    if !exact_index_range(k, counts.next_above(rho), n) {
        return k;
    }
    let limit = match counts.next_above(rho) {
        // Largest index whose grid point stays strictly below the next sample.
        Some(x) => {
            let mut j = ceil(x * n) - 1.0;
            while j / n >= x {
                j -= 1.0;
            }
            while (j + 1.0) / n < x {
                j += 1.0;
            }
            j
        }
        None => 0.0,
    };
    let target = limit.min(0.0).max(k);
    debug_assert_eq!(counts.count_le(target / n), counts.count_le(rho));
    target
}

/// Moves a positive lower grid index toward the origin while the number of
/// samples at or below the grid point is unchanged.
fn shift_down(counts: &SortedCounts, k: f64, n: f64) -> f64 {
    let rho = k / n;
    if !exact_index_range(k, counts.prev_below(rho), n) {
        return k;
    }
    if counts.count_le(rho) > counts.count_lt(rho) {
        return k;
    }
    let limit = match counts.prev_below(rho) {
        // Smallest index whose grid point is at or above the last sample below.
        Some(x) => {
            let mut j = ceil(x * n);
            while j / n < x {
                j += 1.0;
            }
            while (j - 1.0) / n >= x {
                j -= 1.0;
            }
            j
        }
        None => 0.0,
    };
    let target = limit.max(0.0).min(k);
    debug_assert_eq!(counts.count_le(target / n), counts.count_le(rho));
    target
}

/// Evaluation context for one oracle snapshot.
pub struct BandQuery<'a, O: ?Sized> {
    oracle: &'a O,
    schedule: DepthSchedule,
    opts: SearchOptions,
    cache: Option<&'a QueryCache>,
}

impl<'a, O: PointwiseOracle + ?Sized> BandQuery<'a, O> {
    pub fn new(oracle: &'a O) -> Self {
        BandQuery { oracle, schedule: DepthSchedule::default(), opts: SearchOptions::default(), cache: None }
    }

    pub fn schedule(mut self, schedule: DepthSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn options(mut self, opts: SearchOptions) -> Self {
        self.opts = opts;
        self
    }

    /// Attach a memo; the caller must keep `alpha` and the variant fixed for
    /// every query sharing it.
    pub fn cache(mut self, cache: &'a QueryCache) -> Self {
        self.cache = Some(cache);
        self
    }

    fn q(&self, alpha: f64) -> Query<'a, O> {
        Query { oracle: self.oracle, alpha, schedule: self.schedule, opts: self.opts, cache: self.cache }
    }

    pub fn upper_unit(&self, v: f64, alpha: f64) -> Result<BandSide> {
        check_alpha(alpha)?;
        self.q(alpha).upper_unit(v)
    }

    pub fn lower_unit(&self, v: f64, alpha: f64) -> Result<BandSide> {
        check_alpha(alpha)?;
        self.q(alpha).lower_unit(v)
    }

    pub fn upper_real_line(&self, v: f64, alpha: f64) -> Result<BandSide> {
        check_alpha(alpha)?;
        self.q(alpha).upper_real_line(v)
    }

    pub fn lower_real_line(&self, v: f64, alpha: f64) -> Result<BandSide> {
        check_alpha(alpha)?;
        self.q(alpha).lower_real_line(v)
    }

    pub fn upper(&self, variant: BandVariant, v: f64, alpha: f64) -> Result<BandSide> {
        match variant {
            BandVariant::UnitInterval => self.upper_unit(v, alpha),
            BandVariant::RealLine => self.upper_real_line(v, alpha),
        }
    }

    pub fn lower(&self, variant: BandVariant, v: f64, alpha: f64) -> Result<BandSide> {
        match variant {
            BandVariant::UnitInterval => self.lower_unit(v, alpha),
            BandVariant::RealLine => self.lower_real_line(v, alpha),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0) || alpha.is_nan() {
        return Err(Error::domain("alpha", alpha));
    }
    Ok(())
}

/// Known point masses of the reference measure.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpec {
    atoms: Vec<(f64, f64)>,
}

impl AtomSpec {
    /// Atoms `(v_i, ζ_i)`; they are stored by nonincreasing `ζ`.
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.iter().any(|&(v, z)| !v.is_finite() || !(z > 0.0)) {
            return Err(Error::Config("atoms need finite locations and positive mass"));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::Config("atom masses exceed one"));
        }
        atoms.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
        Ok(AtomSpec { atoms })
    }

    pub fn none() -> Self {
        AtomSpec { atoms: Vec::new() }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn continuous_mass(&self) -> f64 {
        (1.0 - self.atoms.iter().map(|a| a.1).sum::<f64>()).max(0.0)
    }
}

/// One evaluated probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandPoint {
    pub v: f64,
    pub lower: f64,
    pub upper: f64,
    pub lower_side: BandSide,
    pub upper_side: BandSide,
    pub oracle_kind: OracleKind,
}

impl BandPoint {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn depth_terminated(&self) -> Option<u32> {
        match (self.lower_side.depth_terminated, self.upper_side.depth_terminated) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }

    pub fn depth_used(&self) -> u32 {
        self.lower_side.depth_used.max(self.upper_side.depth_used)
    }
}

impl<O: PointwiseOracle + ?Sized> BandQuery<'_, O> {
    /// Upper/lower bound with explicit atoms: the continuous part receives
    /// `(1 - Σζ)·α` and each atom `ζ_i·α`. Atoms at or above `v` bound the
    /// upper side and atoms at or below `v` the lower side; each side stops
    /// at the first atom (in decreasing-mass order) with no samples between
    /// it and `v`, as later atoms have smaller budgets and no fewer counts.
    pub fn with_atoms(&self, v: f64, alpha: f64, atoms: &AtomSpec) -> Result<(BandSide, BandSide)> {
        check_alpha(alpha)?;
        let cont = alpha * atoms.continuous_mass();
        let counts = self.oracle.counts();
        let (mut lo, mut hi) = if cont > 0.0 {
            (self.lower_unit(v, cont)?, self.upper_unit(v, cont)?)
        } else {
            (BandSide::trivial(0.0), BandSide::trivial(1.0))
        };
        for &(a, zeta) in atoms.atoms() {
            if a >= v {
                let delta = zeta * alpha;
                let u = self.oracle.upper(a, delta)?;
                hi.queries += 1;
                hi.budget_spent += delta;
                if u < hi.value {
                    hi.value = u;
                    hi.depth_used = 0;
                }
                if counts.count_in(v, a) == 0 {
                    break;
                }
            }
        }
        for &(a, zeta) in atoms.atoms() {
            if a <= v {
                let delta = zeta * alpha;
                let l = self.oracle.lower(a, delta)?;
                lo.queries += 1;
                lo.budget_spent += delta;
                if l > lo.value {
                    lo.value = l;
                    lo.depth_used = 0;
                }
                // Samples at v itself are counted by the atom query at v.
                if counts.count_le(v) == counts.count_le(a) {
                    break;
                }
            }
        }
        Ok((lo, hi))
    }
}

/// Grid family for a whole curve.
#[derive(Debug, Clone, PartialEq)]
pub enum CurveVariant {
    UnitInterval,
    RealLine,
    WithAtoms(AtomSpec),
}

/// Enforces monotonicity: suffix minimum of uppers and prefix maximum of
/// lowers. Input must be sorted by `v`.
pub fn monotonize(points: &mut [BandPoint]) {
    let mut best = 1.0f64;
    for p in points.iter_mut().rev() {
        best = best.min(p.upper);
        p.upper = best;
    }
    let mut best = 0.0f64;
    for p in points.iter_mut() {
        best = best.max(p.lower);
        p.lower = best;
    }
}

/// Evaluates the band on a sorted grid with total level `alpha`, half per
/// side, then monotonizes.
pub fn band_curve<O: PointwiseOracle + ?Sized>(
    grid: &[f64],
    alpha: f64,
    oracle: &O,
    variant: &CurveVariant,
    schedule: DepthSchedule,
) -> Result<Vec<BandPoint>> {
    check_alpha(alpha)?;
    if grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Config("grid must be sorted"));
    }
    let side_alpha = alpha / 2.0;
    let cache = QueryCache::new();
    let q = BandQuery::new(oracle).schedule(schedule).cache(&cache);
    let mut out = Vec::with_capacity(grid.len());
    for &v in grid {
        let (lower_side, upper_side) = match variant {
            CurveVariant::UnitInterval => {
                (q.lower_unit(v, side_alpha)?, q.upper_unit(v, side_alpha)?)
            }
            CurveVariant::RealLine => {
                (q.lower_real_line(v, side_alpha)?, q.upper_real_line(v, side_alpha)?)
            }
            CurveVariant::WithAtoms(atoms) => {
                // Atom queries are not memoized; the continuous part is.
                q.with_atoms(v, side_alpha, atoms)?
            }
        };
        out.push(BandPoint {
            v,
            lower: lower_side.value,
            upper: upper_side.value,
            lower_side,
            upper_side,
            oracle_kind: oracle.kind(),
        });
    }
    monotonize(&mut out);
    Ok(out)
}
