//! The five CLI commands. Each is a deterministic function of its
//! [`RunConfig`] (wall-clock columns excepted, see `timing`).

use std::time::Instant;

use cdfband_core::bands::CurveVariant;
use cdfband_core::estimator::Estimator;
use cdfband_core::oracles::OracleKind;

use crate::config::{Command, RunConfig};
use crate::coverage::{coverage_mc, CoverageSpec};
use crate::error::{CliError, Result};
use crate::output::Table;
use crate::pipeline::{linspace, run_bands, validate_grid};
use crate::rng::replicate_seed;
use crate::sim::{Generator, GeneratorConfig, GeneratorKind};

/// Smoothness of the sweep's reference distribution.
pub const SWEEP_REFERENCE_EPS: f64 = 1.0 / 16.0;

pub fn run(cfg: &RunConfig) -> Result<Table> {
    match cfg.command {
        Command::Band => cmd_band(cfg),
        Command::Simulate => cmd_simulate(cfg),
        Command::Sweep => cmd_sweep(cfg),
        Command::CompareOracles => cmd_compare_oracles(cfg),
        Command::Coverage => cmd_coverage(cfg),
    }
}

pub fn cmd_band(cfg: &RunConfig) -> Result<Table> {
    let gen = GeneratorConfig::new(cfg.generator, cfg.seed, cfg.horizon)?;
    let grid = cfg.grid.values();
    let mut table = Table::new(
        "band",
        &["t", "v", "lower", "upper", "empirical_cdf", "truth", "depth_used"],
    );
    let mut final_width = f64::NAN;
    run_bands(gen, &cfg.band_spec(), &grid, &cfg.checkpoints, |cb| {
        for ((p, &e), &f) in cb.points.iter().zip(&cb.empirical).zip(&cb.truth) {
            table.push(vec![
                cb.t.into(),
                p.v.into(),
                p.lower.into(),
                p.upper.into(),
                e.into(),
                f.into(),
                p.depth_used().into(),
            ]);
        }
        final_width = cb.max_width();
        Ok(true)
    })?;
    table.summary.push(("final_max_width", final_width.into()));
    Ok(table)
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<Table> {
    let gen = GeneratorConfig::new(cfg.generator, cfg.seed, cfg.horizon)?;
    let mut table = Table::new("simulate", &["t", "w", "x"]);
    for (i, obs) in Generator::new(gen)?.enumerate() {
        table.push(vec![(i as u64 + 1).into(), obs.w.into(), obs.x.into()]);
    }
    if let Some(xi) = cfg.generator.smoothness().xi {
        table.summary.push(("smoothness_xi", xi.into()));
    }
    Ok(table)
}

/// Geometric search schedule `t_ref·2^{k/s}`, `k = 0, 1, …`, up to
/// `t_ref·max_multiplier`, without duplicates.
pub fn sweep_schedule(t_ref: u64, steps_per_doubling: u32, max_multiplier: f64) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    for k in 0.. {
        let m = 2f64.powf(k as f64 / steps_per_doubling as f64);
        if m > max_multiplier * (1.0 + 1e-12) {
            break;
        }
        let t = (t_ref as f64 * m).round() as u64;
        if out.last() != Some(&t) {
            out.push(t);
        }
    }
    out
}

/// Least-squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// For each `ε`, the first checkpoint at which the band on i.i.d. uniform
/// `[0, ε]` data is at least as tight (in maximum width over an even grid on
/// `[0, ε]`) as the reference band at `(t_ref, ε = 1/16)`. The search starts
/// at `t_ref`, so multipliers are at least one. All `ε` of one replicate
/// share the same underlying uniforms.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<Table> {
    let sw = &cfg.sweep;
    let schedule = sweep_schedule(sw.t_ref, sw.steps_per_doubling, sw.max_multiplier);
    let horizon = *schedule.last().expect("schedule starts at t_ref");
    let band = cfg.band_spec();
    let mut table = Table::new(
        "sweep",
        &[
            "replicate",
            "seed",
            "eps",
            "log2_inv_eps",
            "t",
            "multiplier",
            "converged",
            "max_width",
            "reference_width",
        ],
    );
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for r in 0..cfg.seeds {
        let seed = replicate_seed(cfg.seed, r);
        let mut reference = f64::NAN;
        let ref_gen = GeneratorConfig::new(GeneratorKind::IidUniformEps { eps: SWEEP_REFERENCE_EPS }, seed, sw.t_ref)?;
        let ref_grid = linspace(sw.points, 0.0, SWEEP_REFERENCE_EPS);
        run_bands(ref_gen, &band, &ref_grid, &[sw.t_ref], |cb| {
            reference = cb.max_width();
            Ok(true)
        })?;
        for &eps in &sw.eps_list {
            let gen = GeneratorConfig::new(GeneratorKind::IidUniformEps { eps }, seed, horizon)?;
            let grid = linspace(sw.points, 0.0, eps);
            validate_grid(&grid)?;
            let mut hit: Option<(u64, f64)> = None;
            let mut last = (0, f64::NAN);
            run_bands(gen, &band, &grid, &schedule, |cb| {
                let w = cb.max_width();
                last = (cb.t, w);
                if w <= reference {
                    hit = Some((cb.t, w));
                    return Ok(false);
                }
                Ok(true)
            })?;
            let converged = hit.is_some();
            let (t, w) = hit.unwrap_or(last);
            let multiplier = t as f64 / sw.t_ref as f64;
            let l2 = -eps.log2();
            if converged {
                xs.push(l2);
                ys.push(multiplier);
            }
            table.push(vec![
                r.into(),
                seed.into(),
                eps.into(),
                l2.into(),
                t.into(),
                multiplier.into(),
                converged.into(),
                w.into(),
                reference.into(),
            ]);
        }
    }
    let slope = if xs.len() >= 2 { ols_slope(&xs, &ys) } else { f64::NAN };
    table.summary.push(("multiplier_slope_per_log2_inv_eps", slope.into()));
    Ok(table)
}

/// Maximum band width of DDRM and empirical Bernstein on the same weighted
/// stream, with the wall-clock time of the final band evaluation.
pub fn cmd_compare_oracles(cfg: &RunConfig) -> Result<Table> {
    if !cfg.generator.is_weighted() {
        return Err(CliError::config(format!(
            "compare-oracles needs an importance-weighted generator (iid-iw | iw-polya), got `{}`",
            cfg.generator.name()
        )));
    }
    let grid = cfg.grid.values();
    validate_grid(&grid)?;
    let oracles = [OracleKind::Ddrm, OracleKind::EmpBern];
    let mut table = Table::new(
        "compare-oracles",
        &["replicate", "seed", "generator", "oracle", "t", "max_width", "seconds"],
    );
    let mut widths = [Vec::new(), Vec::new()];
    for r in 0..cfg.seeds {
        let seed = replicate_seed(cfg.seed, r);
        let mut gen = Generator::new(GeneratorConfig::new(cfg.generator, seed, cfg.horizon)?)?;
        let mut ests = oracles
            .iter()
            .map(|&k| Estimator::new(k, cfg.oracle_config.clone()))
            .collect::<cdfband_core::Result<Vec<_>>>()?;
        for obs in gen.by_ref() {
            for e in &mut ests {
                e.update(obs.w, obs.x)?;
            }
        }
        for (i, est) in ests.iter().enumerate() {
            let start = Instant::now();
            let frozen = est.freeze()?;
            let pts = frozen.band_curve(&grid, cfg.alpha, &cfg.variant, cfg.schedule)?;
            let secs = if cfg.timing { start.elapsed().as_secs_f64() } else { 0.0 };
            let width = pts.iter().map(|p| p.width()).fold(0.0, f64::max);
            widths[i].push(width);
            table.push(vec![
                r.into(),
                seed.into(),
                generator_label(&cfg.generator).into(),
                oracles[i].name().into(),
                gen.t().into(),
                width.into(),
                secs.into(),
            ]);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    table.summary.push(("mean_width_ddrm", mean(&widths[0]).into()));
    table.summary.push(("mean_width_empbern", mean(&widths[1]).into()));
    let tighter = widths[0].iter().zip(&widths[1]).all(|(d, e)| d < e);
    table.summary.push(("ddrm_tighter_every_seed", tighter.into()));
    Ok(table)
}

fn generator_label(g: &GeneratorKind) -> String {
    match g {
        GeneratorKind::IidIw { law, .. } => format!("iid-iw/{law}"),
        other => other.name().to_string(),
    }
}

pub fn cmd_coverage(cfg: &RunConfig) -> Result<Table> {
    let spec = CoverageSpec {
        band: cfg.band_spec(),
        generator: cfg.generator,
        horizon: cfg.horizon,
        base_seed: cfg.seed,
        n_seeds: cfg.seeds,
        probes: cfg.grid.values(),
        checkpoints: cfg.checkpoints.clone(),
    };
    let report = coverage_mc(&spec)?;
    let mut table = Table::new(
        "coverage",
        &["replicate", "seed", "failed", "worst_margin", "worst_t", "worst_v"],
    );
    for o in &report.outcomes {
        table.push(vec![
            o.replicate.into(),
            o.seed.into(),
            o.failed().into(),
            o.worst_margin.into(),
            o.worst_t.into(),
            o.worst_v.into(),
        ]);
    }
    let (lo, hi) = report.confidence_interval();
    table.summary.push(("n_seeds", report.n_seeds().into()));
    table.summary.push(("failures", report.failures().into()));
    table.summary.push(("failure_fraction", report.failure_fraction().into()));
    table.summary.push(("ci95_low", lo.into()));
    table.summary.push(("ci95_high", hi.into()));
    Ok(table)
}

/// Whether a curve variant needs values in `[0, 1]`.
pub fn is_unit_variant(v: &CurveVariant) -> bool {
    !matches!(v, CurveVariant::RealLine)
}
