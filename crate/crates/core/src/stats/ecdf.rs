//! Exact value counts for the unweighted empirical CDF.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use super::OrdValue;
use crate::error::{Error, Result};

/// Ordered multiset of observed values. Ingestion is `O(log n)`; range
/// queries on the live map walk the range, while [`SortedCounts`] (obtained
/// from [`ValueCounts::freeze`]) answers them in `O(log n)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValueCounts {
    entries: BTreeMap<OrdValue, u64>,
    total: u64,
}

impl ValueCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, x: f64) -> Result<()> {
        self.add(x, 1)
    }

    /// Adds `count` copies of `x`.
    pub fn add(&mut self, x: f64, count: u64) -> Result<()> {
        let key = OrdValue::new(x).ok_or(Error::NonFinite { what: "x" })?;
        if count == 0 {
            return Ok(());
        }
        *self.entries.entry(key).or_insert(0) += count;
        self.total += count;
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Samples in `(lo, hi]`.
    pub fn count_in(&self, lo: f64, hi: f64) -> u64 {
        if !(lo < hi) {
            return 0;
        }
        use core::ops::Bound::{Excluded, Included};
        let (Some(lo), Some(hi)) = (OrdValue::new(lo), OrdValue::new(hi)) else {
            return self.count_le(hi) - self.count_le(lo);
        };
        self.entries.range((Excluded(lo), Included(hi))).map(|(_, c)| *c).sum()
    }

    /// Samples `<= x`.
    pub fn count_le(&self, x: f64) -> u64 {
        if x.is_nan() {
            return 0;
        }
        if x == f64::INFINITY {
            return self.total;
        }
        if x == f64::NEG_INFINITY {
            return 0;
        }
        let key = OrdValue::new(x).unwrap();
        self.entries.range(..=key).map(|(_, c)| *c).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        self.entries.iter().map(|(k, c)| (k.get(), *c))
    }

    pub fn freeze(&self) -> SortedCounts {
        SortedCounts::from_sorted(self.iter())
    }
}

/// Immutable sorted form: distinct values with cumulative counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SortedCounts {
    values: Vec<f64>,
    /// `cumulative[i]` = number of samples `<= values[i]`.
    cumulative: Vec<u64>,
}

impl SortedCounts {
    /// Builds from `(value, count)` pairs in strictly increasing value order.
    pub fn from_sorted(pairs: impl IntoIterator<Item = (f64, u64)>) -> Self {
        let mut values = Vec::new();
        let mut cumulative = Vec::new();
        let mut running = 0u64;
        for (v, c) in pairs {
            debug_assert!(values.last().is_none_or(|&p: &f64| p < v));
            running += c;
            values.push(v);
            cumulative.push(running);
        }
        SortedCounts { values, cumulative }
    }

    /// Convenience constructor from an arbitrary sample.
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        let mut vc = ValueCounts::new();
        for &x in xs {
            vc.update(x)?;
        }
        Ok(vc.freeze())
    }

    pub fn total(&self) -> u64 {
        self.cumulative.last().copied().unwrap_or(0)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn distinct(&self) -> usize {
        self.values.len()
    }

    /// Count of the `i`-th distinct value.
    pub fn count_at(&self, i: usize) -> u64 {
        self.cumulative[i] - if i == 0 { 0 } else { self.cumulative[i - 1] }
    }

    /// Number of distinct values `<= x`.
    pub fn distinct_le(&self, x: f64) -> usize {
        self.values.partition_point(|&v| v <= x)
    }

    /// Number of distinct values `< x`.
    pub fn distinct_lt(&self, x: f64) -> usize {
        self.values.partition_point(|&v| v < x)
    }

    fn cum_before(&self, idx: usize) -> u64 {
        if idx == 0 {
            0
        } else {
            self.cumulative[idx - 1]
        }
    }

    pub fn count_le(&self, x: f64) -> u64 {
        self.cum_before(self.distinct_le(x))
    }

    pub fn count_lt(&self, x: f64) -> u64 {
        self.cum_before(self.distinct_lt(x))
    }

    /// Samples in `(lo, hi]`.
    pub fn count_in(&self, lo: f64, hi: f64) -> u64 {
        if !(lo < hi) {
            return 0;
        }
        self.count_le(hi) - self.count_le(lo)
    }

    /// Samples in `[lo, hi)`.
    pub fn count_in_closed_open(&self, lo: f64, hi: f64) -> u64 {
        if !(lo < hi) {
            return 0;
        }
        self.count_lt(hi) - self.count_lt(lo)
    }

    /// Smallest observed value strictly above `x`.
    pub fn next_above(&self, x: f64) -> Option<f64> {
        self.values.get(self.distinct_le(x)).copied()
    }

    /// Largest observed value strictly below `x`.
    pub fn prev_below(&self, x: f64) -> Option<f64> {
        let i = self.distinct_lt(x);
        if i == 0 {
            None
        } else {
            Some(self.values[i - 1])
        }
    }

    /// Mirror image under `x ↦ c - x`. Counts at `c - v` equal counts at `v`.
    pub fn reflect(&self, c: f64) -> SortedCounts {
        let n = self.values.len();
        SortedCounts::from_sorted((0..n).rev().map(|i| (c - self.values[i], self.count_at(i))))
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, u64)> + '_ {
        (0..self.values.len()).map(move |i| (self.values[i], self.count_at(i)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn update_examples() {
        let mut vc = ValueCounts::new();
        vc.update(0.5).unwrap();
        assert_eq!(vc.total(), 1);
        assert_eq!(vc.iter().collect::<Vec<_>>(), [(0.5, 1)]);
        vc.update(0.5).unwrap();
        assert_eq!(vc.iter().collect::<Vec<_>>(), [(0.5, 2)]);
        assert!(vc.update(f64::NAN).is_err());
        assert!(vc.update(f64::INFINITY).is_err());
        assert_eq!(vc.total(), 2);
    }

    #[test]
    fn signed_zero_shares_a_key() {
        let mut vc = ValueCounts::new();
        vc.update(0.0).unwrap();
        vc.update(-0.0).unwrap();
        assert_eq!(vc.distinct(), 1);
        assert_eq!(vc.count_in(-1.0, 0.0), 2);
    }

    #[test]
    fn interval_semantics() {
        let empty = ValueCounts::new();
        assert_eq!(empty.count_in(0.0, 1.0), 0);
        assert_eq!(empty.freeze().count_in(0.0, 1.0), 0);
        let mut vc = ValueCounts::new();
        vc.add(0.25, 2).unwrap();
        vc.update(0.5).unwrap();
        assert_eq!(vc.count_in(0.25, 0.5), 1);
        let sc = vc.freeze();
        assert_eq!(sc.count_in(0.25, 0.5), 1);
        assert_eq!(sc.count_in_closed_open(0.25, 0.5), 2);
        assert_eq!(sc.count_le(0.25), 2);
        assert_eq!(sc.count_lt(0.25), 0);
        assert_eq!(sc.next_above(0.25), Some(0.5));
        assert_eq!(sc.next_above(0.5), None);
        assert_eq!(sc.prev_below(0.5), Some(0.25));
        assert_eq!(sc.prev_below(0.25), None);
    }

    #[test]
    fn random_intervals_match_linear_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut xs: Vec<f64> = (0..1000).map(|_| (rng.random::<f64>() * 64.0).floor() / 64.0).collect();
        xs.sort_by(f64::total_cmp);
        let mut vc = ValueCounts::new();
        for &x in &xs {
            vc.update(x).unwrap();
        }
        let sc = vc.freeze();
        assert_eq!(sc.total(), 1000);
        for _ in 0..100 {
            let a: f64 = rng.random::<f64>() * 1.2 - 0.1;
            let b: f64 = rng.random::<f64>() * 1.2 - 0.1;
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let brute = xs.iter().filter(|&&x| lo < x && x <= hi).count() as u64;
            assert_eq!(vc.count_in(lo, hi), brute);
            assert_eq!(sc.count_in(lo, hi), brute);
            let brute_co = xs.iter().filter(|&&x| lo <= x && x < hi).count() as u64;
            assert_eq!(sc.count_in_closed_open(lo, hi), brute_co);
        }
    }

    #[test]
    fn reflection_preserves_counts() {
        let sc = SortedCounts::from_samples(&[0.1, 0.1, 0.4, 0.9]).unwrap();
        let r = sc.reflect(1.0);
        assert_eq!(r.total(), 4);
        assert_eq!(r.count_le(0.6), 2);
        assert_eq!(r.count_lt(0.9), 2);
    }
}
