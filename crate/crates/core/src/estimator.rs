//! Pairs a streaming accumulator with an oracle family.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::bands::{band_curve, BandPoint, CurveVariant, DepthSchedule};
use crate::error::{Error, Result};
use crate::oracles::{
    BernoulliOracle, DdrmOracle, EmpBernOracle, OracleConfig, OracleKind, PointwiseOracle,
    SubGaussianOracle,
};
use crate::stats::{FrozenTailStats, SortedCounts, ValueCounts, WeightedStreamStats, DEFAULT_GRANULARITY};

#[derive(Debug, Clone)]
enum Accumulator {
    Counts(ValueCounts),
    Weighted(WeightedStreamStats),
}

/// Streaming state for one oracle kind.
#[derive(Debug, Clone)]
pub struct Estimator {
    kind: OracleKind,
    config: OracleConfig,
    acc: Accumulator,
}

impl Estimator {
    pub fn new(kind: OracleKind, config: OracleConfig) -> Result<Self> {
        Self::with_granularity(kind, config, DEFAULT_GRANULARITY)
    }

    /// `k` sets the log-bucket ratio `1 + k` of the weighted accumulator.
    pub fn with_granularity(kind: OracleKind, config: OracleConfig, k: f64) -> Result<Self> {
        config.validate()?;
        let acc = if kind.is_weighted() {
            Accumulator::Weighted(WeightedStreamStats::new(k)?)
        } else {
            Accumulator::Counts(ValueCounts::new())
        };
        Ok(Estimator { kind, config, acc })
    }

    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn t(&self) -> u64 {
        match &self.acc {
            Accumulator::Counts(c) => c.total(),
            Accumulator::Weighted(w) => w.t(),
        }
    }

    /// Adds one observation. Unweighted kinds accept only `w = 1`.
    pub fn update(&mut self, w: f64, x: f64) -> Result<()> {
        match &mut self.acc {
            Accumulator::Counts(c) => {
                if w != 1.0 {
                    return Err(Error::domain("weight for an unweighted oracle", w));
                }
                c.update(x)
            }
            Accumulator::Weighted(s) => s.update(w, x),
        }
    }

    pub fn freeze(&self) -> Result<FrozenEstimate> {
        let stats = match &self.acc {
            Accumulator::Counts(c) => FrozenStats::Counts(c.freeze()),
            Accumulator::Weighted(w) => FrozenStats::Weighted(w.freeze()),
        };
        if stats.counts().total() == 0 {
            return Err(Error::EmptyStream);
        }
        Ok(FrozenEstimate { kind: self.kind, config: self.config.clone(), stats })
    }
}

#[derive(Debug, Clone)]
pub enum FrozenStats {
    Counts(SortedCounts),
    Weighted(FrozenTailStats),
}

impl FrozenStats {
    pub fn counts(&self) -> &SortedCounts {
        match self {
            FrozenStats::Counts(c) => c,
            FrozenStats::Weighted(w) => w.counts(),
        }
    }
}

/// Immutable snapshot ready for band queries.
#[derive(Debug, Clone)]
pub struct FrozenEstimate {
    kind: OracleKind,
    config: OracleConfig,
    stats: FrozenStats,
}

impl FrozenEstimate {
    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn stats(&self) -> &FrozenStats {
        &self.stats
    }

    pub fn t(&self) -> u64 {
        self.stats.counts().total()
    }

    /// Plain (or weighted, for weighted kinds) empirical CDF at `v`.
    pub fn empirical_cdf(&self, v: f64) -> f64 {
        match &self.stats {
            FrozenStats::Counts(c) => c.count_le(v) as f64 / c.total() as f64,
            FrozenStats::Weighted(w) => w.view_le(v).mean(),
        }
    }

    pub fn oracle(&self) -> Result<Box<dyn PointwiseOracle + '_>> {
        let cfg = &self.config;
        Ok(match (&self.stats, self.kind) {
            (FrozenStats::Counts(c), OracleKind::Bernoulli) => {
                Box::new(BernoulliOracle::new(c, cfg.prior_b)?)
            }
            (FrozenStats::Counts(c), OracleKind::SubGaussian) => {
                Box::new(SubGaussianOracle::new(c, cfg.tau)?)
            }
            (FrozenStats::Weighted(w), OracleKind::EmpBern) => Box::new(EmpBernOracle::new(w, cfg.tau)?),
            (FrozenStats::Weighted(w), OracleKind::Ddrm) => {
                Box::new(DdrmOracle::new(w, cfg.grid.clone())?)
            }
            _ => return Err(Error::Mismatch("statistics do not match the oracle kind")),
        })
    }

    pub fn band_curve(
        &self,
        grid: &[f64],
        alpha: f64,
        variant: &CurveVariant,
        schedule: DepthSchedule,
    ) -> Result<Vec<BandPoint>> {
        let oracle = self.oracle()?;
        band_curve(grid, alpha, oracle.as_ref(), variant, schedule)
    }
}
