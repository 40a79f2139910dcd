//! Monte-Carlo audits of simultaneous coverage.

use rayon::prelude::*;

use crate::error::Result;
use crate::pipeline::{run_bands, BandSpec};
use crate::rng::replicate_seed;
use crate::sim::{GeneratorConfig, GeneratorKind};

/// One coverage experiment.
#[derive(Debug, Clone)]
pub struct CoverageSpec {
    pub band: BandSpec,
    pub generator: GeneratorKind,
    pub horizon: u64,
    pub base_seed: u64,
    pub n_seeds: u64,
    pub probes: Vec<f64>,
    pub checkpoints: Vec<u64>,
}

/// Outcome of a single replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedOutcome {
    pub replicate: u64,
    pub seed: u64,
    /// Largest `max(L - F, F - U)` over all checkpoints and probes.
    pub worst_margin: f64,
    pub worst_t: u64,
    pub worst_v: f64,
}

impl SeedOutcome {
    pub fn failed(&self) -> bool {
        self.worst_margin > 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageReport {
    pub outcomes: Vec<SeedOutcome>,
}

impl CoverageReport {
    pub fn n_seeds(&self) -> u64 {
        self.outcomes.len() as u64
    }

    pub fn failures(&self) -> u64 {
        self.outcomes.iter().filter(|o| o.failed()).count() as u64
    }

    pub fn failure_fraction(&self) -> f64 {
        if self.outcomes.is_empty() {
            return 0.0;
        }
        self.failures() as f64 / self.n_seeds() as f64
    }

    /// 95% Wilson score interval for the failure probability.
    pub fn confidence_interval(&self) -> (f64, f64) {
        wilson_interval(self.failures(), self.n_seeds(), 1.959_963_984_540_054)
    }
}

/// Wilson score interval for `k` successes in `n` trials at normal quantile `z`.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    // The endpoints are exactly 0 at k = 0 and 1 at k = n; avoid cancellation.
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Runs one replicate and records its worst violation.
pub fn run_replicate(spec: &CoverageSpec, replicate: u64) -> Result<SeedOutcome> {
    let seed = replicate_seed(spec.base_seed, replicate);
    let gen = GeneratorConfig::new(spec.generator, seed, spec.horizon)?;
    let mut out = SeedOutcome {
        replicate,
        seed,
        worst_margin: f64::NEG_INFINITY,
        worst_t: 0,
        worst_v: f64::NAN,
    };
    run_bands(gen, &spec.band, &spec.probes, &spec.checkpoints, |cb| {
        let (m, v) = cb.worst_margin();
        if m > out.worst_margin {
            out.worst_margin = m;
            out.worst_t = cb.t;
            out.worst_v = v;
        }
        Ok(true)
    })?;
    Ok(out)
}

/// Runs every replicate (in parallel) and reports them in replicate order.
pub fn coverage_mc(spec: &CoverageSpec) -> Result<CoverageReport> {
    if spec.n_seeds == 0 {
        return Err(crate::error::CliError::config("n_seeds must be at least 1"));
    }
    let outcomes = (0..spec.n_seeds)
        .into_par_iter()
        .map(|i| run_replicate(spec, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(CoverageReport { outcomes })
}
