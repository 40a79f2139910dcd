//! Synthetic data-generating processes with exactly tracked estimands.

pub mod law;
pub mod truth;

use std::f64::consts::PI;

use rand::Rng;

pub use law::{beta_cdf, Conditional, WeightLaw, PARETO_SCALE, PARETO_SHAPE};
pub use truth::TruthTracker;

use crate::error::{CliError, Result};
use crate::rng::{stream_rng, SimRng, STREAM_DATA, STREAM_WEIGHTS};

/// Default largest weight of the importance-weighted urn.
pub const DEFAULT_W_MAX: f64 = 10.0;

/// `γ_t = scale · t^exponent` in the continuous Polya urn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyaSchedule {
    pub scale: f64,
    pub exponent: f64,
}

impl Default for PolyaSchedule {
    fn default() -> Self {
        PolyaSchedule { scale: 1.0, exponent: 1.0 }
    }
}

impl PolyaSchedule {
    pub fn gamma(&self, t: u64) -> f64 {
        if self.scale == 0.0 {
            return 0.0;
        }
        self.scale * (t as f64).powf(self.exponent)
    }

    fn validate(&self) -> Result<()> {
        if !(self.scale >= 0.0) || !self.scale.is_finite() {
            return Err(CliError::config("polya_scale must be a nonnegative number"));
        }
        if !self.exponent.is_finite() {
            return Err(CliError::config("polya_q must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorKind {
    IidBeta { a: f64, b: f64 },
    IidLognormal { mu: f64, sigma: f64 },
    IidGaussian { mu: f64, sigma: f64 },
    /// I.i.d. uniform on `[0, eps]`.
    IidUniformEps { eps: f64 },
    Polya { schedule: PolyaSchedule },
    /// `W ∈ {0, w_max}` with `P(W = w_max) = 1/w_max`; one urn per weight.
    IwPolya { schedule: PolyaSchedule, w_max: f64 },
    /// `X ~ Beta(a, b)` and an independent weight from `law`.
    IidIw { a: f64, b: f64, law: WeightLaw },
}

impl GeneratorKind {
    pub const NAMES: [&'static str; 7] = [
        "iid-beta",
        "iid-lognormal",
        "iid-gaussian",
        "iid-uniform-eps",
        "polya",
        "iw-polya",
        "iid-iw",
    ];

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::IidBeta { .. } => "iid-beta",
            GeneratorKind::IidLognormal { .. } => "iid-lognormal",
            GeneratorKind::IidGaussian { .. } => "iid-gaussian",
            GeneratorKind::IidUniformEps { .. } => "iid-uniform-eps",
            GeneratorKind::Polya { .. } => "polya",
            GeneratorKind::IwPolya { .. } => "iw-polya",
            GeneratorKind::IidIw { .. } => "iid-iw",
        }
    }

    /// Whether the stream carries nontrivial importance weights.
    pub fn is_weighted(&self) -> bool {
        matches!(self, GeneratorKind::IwPolya { .. } | GeneratorKind::IidIw { .. })
    }

    /// Whether values live in `[0, 1]`.
    pub fn unit_support(&self) -> bool {
        !matches!(self, GeneratorKind::IidLognormal { .. } | GeneratorKind::IidGaussian { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(CliError::config(format!("{name} must be positive and finite, got {x}")))
            }
        };
        match *self {
            GeneratorKind::IidBeta { a, b } | GeneratorKind::IidIw { a, b, .. } => {
                positive("beta_a", a)?;
                positive("beta_b", b)
            }
            GeneratorKind::IidLognormal { mu, sigma } | GeneratorKind::IidGaussian { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(CliError::config("mu must be finite"));
                }
                positive("sigma", sigma)
            }
            GeneratorKind::IidUniformEps { eps } => {
                if eps > 0.0 && eps <= 1.0 {
                    Ok(())
                } else {
                    Err(CliError::config(format!("eps must lie in (0, 1], got {eps}")))
                }
            }
            GeneratorKind::Polya { schedule } => schedule.validate(),
            GeneratorKind::IwPolya { schedule, w_max } => {
                schedule.validate()?;
                if w_max >= 1.0 && w_max.is_finite() {
                    Ok(())
                } else {
                    Err(CliError::config(format!("w_max must be at least 1, got {w_max}")))
                }
            }
        }
    }

    /// Smoothness of the generating law with respect to its reference
    /// measure (uniform on `[0, 1]`, or Lebesgue for real-line kinds).
    pub fn smoothness(&self) -> SmoothnessMetadata {
        match *self {
            GeneratorKind::IidBeta { a, b } | GeneratorKind::IidIw { a, b, .. } => {
                SmoothnessMetadata::fixed(beta_smoothness(a, b))
            }
            GeneratorKind::IidGaussian { sigma, .. } => {
                SmoothnessMetadata::fixed(sigma * (2.0 * PI).sqrt())
            }
            GeneratorKind::IidLognormal { mu, sigma } => {
                SmoothnessMetadata::fixed(sigma * (2.0 * PI).sqrt() * (mu - 0.5 * sigma * sigma).exp())
            }
            GeneratorKind::IidUniformEps { eps } => SmoothnessMetadata::fixed(eps),
            GeneratorKind::Polya { schedule } | GeneratorKind::IwPolya { schedule, .. } => {
                if schedule.scale == 0.0 {
                    SmoothnessMetadata::fixed(beta_smoothness(2.0, 2.0))
                } else {
                    SmoothnessMetadata {
                        xi: None,
                        decay_exponent: Some(1.0 + schedule.exponent),
                    }
                }
            }
        }
    }
}

/// Reciprocal of the largest Beta density; zero when the density is
/// unbounded.
fn beta_smoothness(a: f64, b: f64) -> f64 {
    if a < 1.0 || b < 1.0 {
        return 0.0;
    }
    let mode = if a + b > 2.0 { (a - 1.0) / (a + b - 2.0) } else { 0.5 };
    let ln_beta = libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b);
    let mut ln_f = -ln_beta;
    if a > 1.0 {
        ln_f += (a - 1.0) * mode.ln();
    }
    if b > 1.0 {
        ln_f += (b - 1.0) * (-mode).ln_1p();
    }
    (-ln_f).exp()
}

/// Reporting-only smoothness description. Estimators never read it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessMetadata {
    /// Known smoothness `ξ`, the reciprocal of the largest density.
    pub xi: Option<f64>,
    /// When `ξ` shrinks over time: `ξ_t ≳ t^{-decay_exponent}`.
    pub decay_exponent: Option<f64>,
}

impl SmoothnessMetadata {
    fn fixed(xi: f64) -> Self {
        SmoothnessMetadata { xi: Some(xi), decay_exponent: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    pub seed: u64,
    pub horizon: u64,
}

impl GeneratorConfig {
    pub fn new(kind: GeneratorKind, seed: u64, horizon: u64) -> Result<Self> {
        kind.validate()?;
        Ok(GeneratorConfig { kind, seed, horizon })
    }
}

/// One observation: importance weight and value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub w: f64,
    pub x: f64,
}

/// Urn counts `(#{X > 1/2}, #{X ≤ 1/2})`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Urn {
    hi: u64,
    lo: u64,
}

impl Urn {
    fn law(&self, gamma: f64) -> Conditional {
        Conditional::Beta {
            a: 2.0 + gamma * self.hi as f64,
            b: 2.0 + gamma * self.lo as f64,
        }
    }

    fn record(&mut self, x: f64) {
        if x > 0.5 {
            self.hi += 1;
        } else {
            self.lo += 1;
        }
    }
}

/// A seeded stream of observations that records the exact conditional law
/// used at every step.
#[derive(Debug, Clone)]
pub struct Generator {
    config: GeneratorConfig,
    data_rng: SimRng,
    weight_rng: SimRng,
    t: u64,
    /// Index 0 is the `W = 0` urn (or the only urn), index 1 the `W = w_max` urn.
    urns: [Urn; 2],
    truth: TruthTracker,
    /// Tracker of `E[W·1{X ≤ v}]` when it differs from `truth`.
    weighted_truth: Option<TruthTracker>,
}

impl Generator {
    pub fn new(config: GeneratorConfig) -> Result<Self> {
        config.kind.validate()?;
        let weighted_truth = match config.kind {
            GeneratorKind::IwPolya { .. } => Some(TruthTracker::new()),
            _ => None,
        };
        Ok(Generator {
            config,
            data_rng: stream_rng(config.seed, STREAM_DATA),
            weight_rng: stream_rng(config.seed, STREAM_WEIGHTS),
            t: 0,
            urns: [Urn::default(); 2],
            truth: TruthTracker::new(),
            weighted_truth,
        })
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    /// Averaged conditional CDF of the values themselves.
    pub fn truth(&self) -> &TruthTracker {
        &self.truth
    }

    /// Averaged conditional `E[W·1{X ≤ v}]`. Equal to [`Self::truth`] except
    /// for the importance-weighted urn, where it is the `w_max` urn's CDF.
    pub fn weighted_truth(&self) -> &TruthTracker {
        self.weighted_truth.as_ref().unwrap_or(&self.truth)
    }

    /// The estimand of a weighted or unweighted estimator on this stream.
    pub fn target(&self, weighted: bool) -> &TruthTracker {
        if weighted {
            self.weighted_truth()
        } else {
            &self.truth
        }
    }

    /// Draws the next observation, ignoring the horizon.
    pub fn step(&mut self) -> Observation {
        self.t += 1;
        let t = self.t;
        match self.config.kind {
            GeneratorKind::IidBeta { a, b } => self.iid(Conditional::Beta { a, b }),
            GeneratorKind::IidLognormal { mu, sigma } => {
                self.iid(Conditional::LogNormal { mu, sigma })
            }
            GeneratorKind::IidGaussian { mu, sigma } => {
                self.iid(Conditional::Gaussian { mu, sigma })
            }
            GeneratorKind::IidUniformEps { eps } => self.iid(Conditional::Uniform { hi: eps }),
            GeneratorKind::Polya { schedule } => {
                let law = self.urns[0].law(schedule.gamma(t));
                self.truth.push(law);
                let x = law.sample(&mut self.data_rng);
                self.urns[0].record(x);
                Observation { w: 1.0, x }
            }
            GeneratorKind::IwPolya { schedule, w_max } => {
                let gamma = schedule.gamma(t);
                let (law0, law1) = (self.urns[0].law(gamma), self.urns[1].law(gamma));
                let p = 1.0 / w_max;
                self.truth.push_mixture(&[(law1, p), (law0, 1.0 - p)]);
                if let Some(wt) = self.weighted_truth.as_mut() {
                    wt.push(law1);
                }
                let heavy = self.weight_rng.random::<f64>() < p;
                let (class, law, w) = if heavy { (1, law1, w_max) } else { (0, law0, 0.0) };
                let x = law.sample(&mut self.data_rng);
                self.urns[class].record(x);
                Observation { w, x }
            }
            GeneratorKind::IidIw { a, b, law } => {
                let obs = self.iid(Conditional::Beta { a, b });
                Observation { w: law.sample(&mut self.weight_rng), x: obs.x }
            }
        }
    }

    fn iid(&mut self, law: Conditional) -> Observation {
        self.truth.push(law);
        Observation { w: 1.0, x: law.sample(&mut self.data_rng) }
    }
}

impl Iterator for Generator {
    type Item = Observation;

    /// Yields observations until the configured horizon.
    fn next(&mut self) -> Option<Observation> {
        (self.t < self.config.horizon).then(|| self.step())
    }
}
