//! Importance-weighted accumulators.
//!
//! Per distinct value we keep the count, the weight sum, the squared weight
//! sum and geometric log buckets of the weights. [`WeightedStreamStats::freeze`]
//! turns these into cumulative statistics for every threshold, from which
//! [`TailView`]s of `Y = W·1{X ≤ ρ}` or `Y = W·1{X > ρ}` are read in `O(log n)`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::{OrdValue, SortedCounts};
use crate::error::{Error, Result};
use crate::math::{floor, ln, ln1p, powi};

pub const DEFAULT_GRANULARITY: f64 = 0.25;

/// Interpolation accumulators for one bucket `[z_l, (1+k) z_l)`:
/// `a = Σα`, `b = Σ(1-α)`, `c = Σα(1-α)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BucketAcc {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl BucketAcc {
    fn add_alpha(&mut self, alpha: f64) {
        self.a += alpha;
        self.b += 1.0 - alpha;
        self.c += alpha * (1.0 - alpha);
    }

    fn merge(&mut self, other: &BucketAcc) {
        self.a += other.a;
        self.b += other.b;
        self.c += other.c;
    }
}

/// Lower edge `(1+k)^n` of bucket `n`.
#[inline]
pub fn bucket_edge(k: f64, n: i32) -> f64 {
    powi(1.0 + k, n)
}

/// Bucket index `n` with `(1+k)^n <= z < (1+k)^{n+1}` and the interpolation
/// weight `α = (z_u - z)/(z_u - z_l) ∈ (0, 1]`.
pub fn locate(k: f64, z: f64) -> Result<(i32, f64)> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::domain("bucketed value", z));
    }
    let guess = floor(ln(z) / ln1p(k));
    if !(guess.abs() < 1e9) {
        return Err(Error::domain("bucketed value", z));
    }
    let mut n = guess as i32;
    while bucket_edge(k, n) > z {
        n -= 1;
    }
    while bucket_edge(k, n + 1) <= z {
        n += 1;
    }
    let lo = bucket_edge(k, n);
    let hi = bucket_edge(k, n + 1);
    if !hi.is_finite() {
        return Err(Error::domain("bucketed value", z));
    }
    let alpha = (hi - z) / (hi - lo);
    Ok((n, alpha.clamp(f64::MIN_POSITIVE, 1.0)))
}

fn check_granularity(k: f64) -> Result<()> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::domain("k", k));
    }
    Ok(())
}

/// Geometric log buckets over a multiset of nonnegative values.
#[derive(Debug, Clone, PartialEq)]
pub struct LogApproxBuckets {
    k: f64,
    zero_count: u64,
    positive_count: u64,
    buckets: BTreeMap<i32, BucketAcc>,
}

impl Default for LogApproxBuckets {
    fn default() -> Self {
        LogApproxBuckets {
            k: DEFAULT_GRANULARITY,
            zero_count: 0,
            positive_count: 0,
            buckets: BTreeMap::new(),
        }
    }
}

impl LogApproxBuckets {
    pub fn new(k: f64) -> Result<Self> {
        check_granularity(k)?;
        Ok(LogApproxBuckets { k, ..Default::default() })
    }

    pub(crate) fn from_parts(
        k: f64,
        zero_count: u64,
        positive_count: u64,
        buckets: BTreeMap<i32, BucketAcc>,
    ) -> Self {
        LogApproxBuckets { k, zero_count, positive_count, buckets }
    }

    pub fn insert(&mut self, z: f64) -> Result<()> {
        if z == 0.0 {
            self.zero_count += 1;
            return Ok(());
        }
        if z < 0.0 {
            return Err(Error::NegativeWeight(z));
        }
        let (n, alpha) = locate(self.k, z)?;
        self.buckets.entry(n).or_default().add_alpha(alpha);
        self.positive_count += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &LogApproxBuckets) {
        debug_assert_eq!(self.k, other.k);
        self.zero_count += other.zero_count;
        self.positive_count += other.positive_count;
        for (n, acc) in &other.buckets {
            self.buckets.entry(*n).or_default().merge(acc);
        }
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn zero_count(&self) -> u64 {
        self.zero_count
    }

    pub fn positive_count(&self) -> u64 {
        self.positive_count
    }

    pub fn buckets(&self) -> impl Iterator<Item = (i32, BucketAcc)> + '_ {
        self.buckets.iter().map(|(n, a)| (*n, *a))
    }

    /// Lower bound on `Σ ln(1 + λ(z - ŷ))` over the ingested values.
    pub fn log_sum_lower_bound(&self, lambda: f64, y_star: f64) -> f64 {
        let zeros = self.zero_count as f64 * ln1p(-lambda * y_star);
        zeros + bucketed_log_sum(self.k, self.buckets(), lambda, y_star)
    }
}

/// Strong-concavity lower bound on `Σ ln(1 + λ(z - ŷ))` over the positive
/// values summarized by `buckets`.
///
/// On `[z_l, z_u]` the function `f(z) = ln(1 + λ(z - ŷ))` has curvature at
/// least `λ² / (1 + λ(z_u - ŷ))²`, so with `z = α z_l + (1-α) z_u`
///
/// `f(z) ≥ α f(z_l) + (1-α) f(z_u) + ½ α(1-α) (k z_l λ / (1 - λŷ + λ(1+k) z_l))²`.
pub fn bucketed_log_sum(
    k: f64,
    buckets: impl IntoIterator<Item = (i32, BucketAcc)>,
    lambda: f64,
    y_star: f64,
) -> f64 {
    let shift = 1.0 - lambda * y_star;
    let mut total = 0.0;
    for (n, acc) in buckets {
        let zl = bucket_edge(k, n);
        let zu = bucket_edge(k, n + 1);
        let fl = ln1p(lambda * (zl - y_star));
        let fu = ln1p(lambda * (zu - y_star));
        let curv = k * zl * lambda / (shift + lambda * (1.0 + k) * zl);
        total += acc.a * fl + acc.b * fu + 0.5 * acc.c * curv * curv;
    }
    total
}

/// Accumulators for all samples that landed exactly on one value.
#[derive(Debug, Clone, PartialEq)]
pub struct PointStats {
    pub count: u64,
    pub sum_w: f64,
    pub sum_w_sq: f64,
    pub buckets: LogApproxBuckets,
}

impl PointStats {
    fn new(k: f64) -> Self {
        PointStats {
            count: 0,
            sum_w: 0.0,
            sum_w_sq: 0.0,
            buckets: LogApproxBuckets { k, ..Default::default() },
        }
    }
}

/// Streaming importance-weighted statistics with `O(log n)` ingestion.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedStreamStats {
    pub(crate) k: f64,
    pub(crate) points: BTreeMap<OrdValue, PointStats>,
    pub(crate) t: u64,
    pub(crate) sum_w: f64,
    pub(crate) sum_w_sq: f64,
}

impl Default for WeightedStreamStats {
    fn default() -> Self {
        WeightedStreamStats {
            k: DEFAULT_GRANULARITY,
            points: BTreeMap::new(),
            t: 0,
            sum_w: 0.0,
            sum_w_sq: 0.0,
        }
    }
}

impl WeightedStreamStats {
    pub fn new(k: f64) -> Result<Self> {
        check_granularity(k)?;
        Ok(WeightedStreamStats { k, ..Default::default() })
    }

    pub fn update(&mut self, w: f64, x: f64) -> Result<()> {
        if !w.is_finite() {
            return Err(Error::NonFinite { what: "w" });
        }
        if w < 0.0 {
            return Err(Error::NegativeWeight(w));
        }
        let key = OrdValue::new(x).ok_or(Error::NonFinite { what: "x" })?;
        if w > 0.0 {
            // Validate before mutating anything.
            locate(self.k, w)?;
        }
        let k = self.k;
        let point = self.points.entry(key).or_insert_with(|| PointStats::new(k));
        point.buckets.insert(w)?;
        point.count += 1;
        point.sum_w += w;
        point.sum_w_sq += w * w;
        self.t += 1;
        self.sum_w += w;
        self.sum_w_sq += w * w;
        Ok(())
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn total_weight(&self) -> f64 {
        self.sum_w
    }

    pub fn total_weight_sq(&self) -> f64 {
        self.sum_w_sq
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, &PointStats)> + '_ {
        self.points.iter().map(|(x, p)| (x.get(), p))
    }

    pub fn counts(&self) -> SortedCounts {
        SortedCounts::from_sorted(self.points().map(|(x, p)| (x, p.count)))
    }

    /// Builds cumulative statistics for every threshold in `O(m·B)` where
    /// `m` is the number of distinct values and `B` the bucket count.
    pub fn freeze(&self) -> FrozenTailStats {
        let counts = self.counts();
        let pts: Vec<&PointStats> = self.points.values().collect();
        let m = pts.len();

        let build = |order: &mut dyn Iterator<Item = usize>| {
            let mut aggs = Vec::with_capacity(m + 1);
            let mut offsets = Vec::with_capacity(m + 2);
            let mut flat: Vec<(i32, BucketAcc)> = Vec::new();
            let mut running = Aggregate::default();
            let mut merged: BTreeMap<i32, BucketAcc> = BTreeMap::new();
            let push = |running: &Aggregate, merged: &BTreeMap<i32, BucketAcc>,
                            aggs: &mut Vec<Aggregate>, offsets: &mut Vec<usize>,
                            flat: &mut Vec<(i32, BucketAcc)>| {
                aggs.push(*running);
                offsets.push(flat.len());
                flat.extend(merged.iter().map(|(n, a)| (*n, *a)));
            };
            push(&running, &merged, &mut aggs, &mut offsets, &mut flat);
            for i in order {
                let p = pts[i];
                running.positive += p.buckets.positive_count;
                running.sum += p.sum_w;
                running.sum_sq += p.sum_w_sq;
                for (n, acc) in &p.buckets.buckets {
                    merged.entry(*n).or_default().merge(acc);
                }
                push(&running, &merged, &mut aggs, &mut offsets, &mut flat);
            }
            offsets.push(flat.len());
            (aggs, offsets, flat)
        };

        let (prefix, prefix_offsets, prefix_buckets) = build(&mut (0..m));
        let (mut suffix, mut suffix_offsets, suffix_flat) = build(&mut (0..m).rev());
        // Re-index the suffix pass so that entry i covers distinct values i..m.
        suffix.reverse();
        let ends: Vec<(usize, usize)> =
            suffix_offsets.windows(2).map(|w| (w[0], w[1])).collect();
        suffix_offsets.clear();
        let mut suffix_buckets = Vec::with_capacity(suffix_flat.len());
        for &(s, e) in ends.iter().rev() {
            suffix_offsets.push(suffix_buckets.len());
            suffix_buckets.extend_from_slice(&suffix_flat[s..e]);
        }
        suffix_offsets.push(suffix_buckets.len());

        FrozenTailStats {
            k: self.k,
            t: self.t,
            counts,
            sum_w: self.sum_w,
            sum_w_sq: self.sum_w_sq,
            prefix,
            prefix_offsets,
            prefix_buckets,
            suffix,
            suffix_offsets,
            suffix_buckets,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Aggregate {
    positive: u64,
    sum: f64,
    sum_sq: f64,
}

/// Immutable cumulative statistics at every threshold of a snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenTailStats {
    k: f64,
    t: u64,
    counts: SortedCounts,
    sum_w: f64,
    sum_w_sq: f64,
    /// `prefix[i]` covers the first `i` distinct values.
    prefix: Vec<Aggregate>,
    prefix_offsets: Vec<usize>,
    prefix_buckets: Vec<(i32, BucketAcc)>,
    /// `suffix[i]` covers distinct values `i..m`.
    suffix: Vec<Aggregate>,
    suffix_offsets: Vec<usize>,
    suffix_buckets: Vec<(i32, BucketAcc)>,
}

impl FrozenTailStats {
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn counts(&self) -> &SortedCounts {
        &self.counts
    }

    pub fn total_weight(&self) -> f64 {
        self.sum_w
    }

    pub fn total_weight_sq(&self) -> f64 {
        self.sum_w_sq
    }

    fn prefix_view(&self, i: usize) -> TailView<'_> {
        let agg = self.prefix[i];
        TailView {
            t: self.t,
            positive: agg.positive,
            sum: agg.sum,
            sum_sq: agg.sum_sq,
            k: self.k,
            buckets: &self.prefix_buckets[self.prefix_offsets[i]..self.prefix_offsets[i + 1]],
        }
    }

    fn suffix_view(&self, i: usize) -> TailView<'_> {
        let agg = self.suffix[i];
        TailView {
            t: self.t,
            positive: agg.positive,
            sum: agg.sum,
            sum_sq: agg.sum_sq,
            k: self.k,
            buckets: &self.suffix_buckets[self.suffix_offsets[i]..self.suffix_offsets[i + 1]],
        }
    }

    /// Statistics of `Y_s = W_s·1{X_s ≤ ρ}`.
    pub fn view_le(&self, rho: f64) -> TailView<'_> {
        self.prefix_view(self.counts.distinct_le(rho))
    }

    /// Statistics of `Y_s = W_s·1{X_s > ρ}`.
    pub fn view_gt(&self, rho: f64) -> TailView<'_> {
        self.suffix_view(self.counts.distinct_le(rho))
    }

    /// Statistics of `Y_s = W_s·1{X_s < v}`.
    pub fn view_lt(&self, v: f64) -> TailView<'_> {
        self.prefix_view(self.counts.distinct_lt(v))
    }

    /// Statistics of `Y_s = W_s·1{X_s ≥ v}`.
    pub fn view_ge(&self, v: f64) -> TailView<'_> {
        self.suffix_view(self.counts.distinct_lt(v))
    }
}

/// Sufficient statistics of one nonnegative process `Y_1..Y_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailView<'a> {
    pub t: u64,
    /// Number of strictly positive `Y_s`.
    pub positive: u64,
    pub sum: f64,
    pub sum_sq: f64,
    pub k: f64,
    pub buckets: &'a [(i32, BucketAcc)],
}

impl TailView<'_> {
    pub fn zero_count(&self) -> u64 {
        self.t - self.positive
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.t as f64
    }

    /// Lower bound on `Σ_s ln(1 + λ(Y_s - ŷ))`.
    pub fn log_sum_lower_bound(&self, lambda: f64, y_star: f64) -> f64 {
        self.zero_count() as f64 * ln1p(-lambda * y_star)
            + bucketed_log_sum(self.k, self.buckets.iter().copied(), lambda, y_star)
    }
}

/// Owned counterpart of [`TailView`], built directly from raw values.
#[derive(Debug, Clone, PartialEq)]
pub struct TailSummary {
    pub t: u64,
    pub positive: u64,
    pub sum: f64,
    pub sum_sq: f64,
    pub k: f64,
    pub buckets: Vec<(i32, BucketAcc)>,
}

impl TailSummary {
    pub fn from_values(k: f64, ys: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut b = LogApproxBuckets::new(k)?;
        let (mut sum, mut sum_sq, mut t) = (0.0, 0.0, 0u64);
        for y in ys {
            if !y.is_finite() {
                return Err(Error::NonFinite { what: "y" });
            }
            b.insert(y)?;
            sum += y;
            sum_sq += y * y;
            t += 1;
        }
        Ok(TailSummary {
            t,
            positive: b.positive_count,
            sum,
            sum_sq,
            k,
            buckets: b.buckets().collect(),
        })
    }

    pub fn view(&self) -> TailView<'_> {
        TailView {
            t: self.t,
            positive: self.positive,
            sum: self.sum,
            sum_sq: self.sum_sq,
            k: self.k,
            buckets: &self.buckets,
        }
    }
}
