//! Streaming sufficient statistics.

pub mod codec;
pub mod ecdf;
pub mod weighted;

pub use ecdf::{SortedCounts, ValueCounts};
pub use weighted::{
    BucketAcc, FrozenTailStats, LogApproxBuckets, PointStats, TailSummary, TailView,
    WeightedStreamStats, DEFAULT_GRANULARITY,
};

use core::cmp::Ordering;

/// Totally ordered finite value used as a map key. `-0.0` is folded into
/// `0.0` so both land on the same key.
#[derive(Debug, Clone, Copy)]
pub struct OrdValue(f64);

impl OrdValue {
    pub fn new(x: f64) -> Option<Self> {
        if x.is_finite() {
            Some(OrdValue(if x == 0.0 { 0.0 } else { x }))
        } else {
            None
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl PartialEq for OrdValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for OrdValue {}
impl PartialOrd for OrdValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdValue {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}
