//! Streams a generator into an estimator and evaluates bands at checkpoints.

use cdfband_core::bands::{BandPoint, CurveVariant, DepthSchedule};
use cdfband_core::estimator::Estimator;
use cdfband_core::oracles::{OracleConfig, OracleKind};

use crate::error::{CliError, Result};
use crate::sim::{Generator, GeneratorConfig};

/// Everything needed to turn statistics into a band.
#[derive(Debug, Clone, PartialEq)]
pub struct BandSpec {
    pub oracle: OracleKind,
    pub oracle_config: OracleConfig,
    /// Total level: `alpha/2` per side, simultaneously over time and values.
    pub alpha: f64,
    pub variant: CurveVariant,
    pub schedule: DepthSchedule,
}

impl BandSpec {
    pub fn new(oracle: OracleKind, alpha: f64, variant: CurveVariant) -> Self {
        BandSpec {
            oracle,
            oracle_config: OracleConfig::default(),
            alpha,
            variant,
            schedule: DepthSchedule::default(),
        }
    }
}

/// A band evaluated at one checkpoint, with the matching estimand.
#[derive(Debug, Clone)]
pub struct CheckpointBand {
    pub t: u64,
    pub points: Vec<BandPoint>,
    pub empirical: Vec<f64>,
    pub truth: Vec<f64>,
}

impl CheckpointBand {
    pub fn max_width(&self) -> f64 {
        self.points.iter().map(BandPoint::width).fold(0.0, f64::max)
    }

    /// Largest `max(L - F, F - U)` over the grid; positive means a violation.
    pub fn worst_margin(&self) -> (f64, f64) {
        let mut worst = (f64::NEG_INFINITY, f64::NAN);
        for (p, &f) in self.points.iter().zip(&self.truth) {
            let m = (p.lower - f).max(f - p.upper);
            if m > worst.0 {
                worst = (m, p.v);
            }
        }
        worst
    }
}

/// Checks that checkpoints are strictly increasing and within the horizon.
pub fn validate_checkpoints(checkpoints: &[u64], horizon: u64) -> Result<()> {
    if checkpoints.is_empty() {
        return Err(CliError::config("at least one checkpoint is required"));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::config("checkpoints must be strictly increasing"));
    }
    if let Some(&last) = checkpoints.last() {
        if last > horizon {
            return Err(CliError::config(format!(
                "checkpoint {last} exceeds the horizon {horizon}"
            )));
        }
    }
    Ok(())
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(CliError::config("the probe grid is empty"));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(CliError::config("probe values must be finite"));
    }
    if grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(CliError::config("probe values must be sorted"));
    }
    Ok(())
}

/// Runs one seeded stream and hands each checkpoint's band to `sink`, which
/// returns `false` to stop early.
pub fn run_bands(
    generator: GeneratorConfig,
    band: &BandSpec,
    grid: &[f64],
    checkpoints: &[u64],
    mut sink: impl FnMut(CheckpointBand) -> Result<bool>,
) -> Result<()> {
    validate_grid(grid)?;
    validate_checkpoints(checkpoints, generator.horizon)?;
    if generator.kind.is_weighted() && !band.oracle.is_weighted() {
        return Err(CliError::config(format!(
            "oracle `{}` ignores importance weights; use empbern or ddrm with `{}`",
            band.oracle,
            generator.kind.name()
        )));
    }
    let mut gen = Generator::new(generator)?;
    let mut est = Estimator::new(band.oracle, band.oracle_config.clone())?;
    for &t in checkpoints {
        while gen.t() < t {
            let obs = gen.step();
            est.update(obs.w, obs.x)?;
        }
        let frozen = est.freeze()?;
        let points = frozen.band_curve(grid, band.alpha, &band.variant, band.schedule)?;
        let empirical = grid.iter().map(|&v| frozen.empirical_cdf(v)).collect();
        let truth = gen.target(band.oracle.is_weighted()).cdf_many(grid)?;
        if !sink(CheckpointBand { t, points, empirical, truth })? {
            break;
        }
    }
    Ok(())
}

/// Evenly spaced grid with `n` points on `[lo, hi]`.
pub fn linspace(n: usize, lo: f64, hi: f64) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}
