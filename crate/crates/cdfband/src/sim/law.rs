//! Closed-form per-step laws of `X` and of the importance weight.

use std::fmt;
use std::str::FromStr;

use cdfband_core::numeric::{log_reg_inc_beta_with, ToleranceConfig};
use rand::Rng;
use rand_distr::{Beta, Distribution, LogNormal, Normal};

use crate::error::{CliError, Result};

/// Number of standard deviations beyond which a Beta CDF with both shapes at
/// least [`BETA_SHORTCUT_MIN_SHAPE`] is reported as exactly 0 or 1. The
/// neglected mass is below `1e-300`.
pub const BETA_SHORTCUT_SDS: f64 = 50.0;
pub const BETA_SHORTCUT_MIN_SHAPE: f64 = 100.0;

/// Conditional law of `X_t` given the past.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Conditional {
    Beta { a: f64, b: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Gaussian { mu: f64, sigma: f64 },
    /// Uniform on `[0, hi]`.
    Uniform { hi: f64 },
}

impl Conditional {
    pub fn cdf(&self, v: f64) -> Result<f64> {
        if v.is_nan() {
            return Err(CliError::config("probe value is NaN"));
        }
        Ok(match *self {
            Conditional::Beta { a, b } => beta_cdf(v, a, b)?,
            Conditional::LogNormal { mu, sigma } => {
                if v <= 0.0 {
                    0.0
                } else {
                    normal_cdf((v.ln() - mu) / sigma)
                }
            }
            Conditional::Gaussian { mu, sigma } => normal_cdf((v - mu) / sigma),
            Conditional::Uniform { hi } => (v / hi).clamp(0.0, 1.0),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Conditional::Beta { a, b } => Beta::new(a, b).expect("validated shapes").sample(rng),
            Conditional::LogNormal { mu, sigma } => {
                LogNormal::new(mu, sigma).expect("validated scale").sample(rng)
            }
            Conditional::Gaussian { mu, sigma } => {
                Normal::new(mu, sigma).expect("validated scale").sample(rng)
            }
            Conditional::Uniform { hi } => hi * rng.random::<f64>(),
        }
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Regularized incomplete beta `I_v(a, b)`, computed on whichever side is
/// smaller.
pub fn beta_cdf(v: f64, a: f64, b: f64) -> Result<f64> {
    if v <= 0.0 {
        return Ok(0.0);
    }
    if v >= 1.0 {
        return Ok(1.0);
    }
    if a >= BETA_SHORTCUT_MIN_SHAPE && b >= BETA_SHORTCUT_MIN_SHAPE {
        let n = a + b;
        let mean = a / n;
        let sd = (a * b / (n * n * (n + 1.0))).sqrt();
        if v < mean - BETA_SHORTCUT_SDS * sd {
            return Ok(0.0);
        }
        if v > mean + BETA_SHORTCUT_SDS * sd {
            return Ok(1.0);
        }
    }
    let base = ToleranceConfig::default();
    let tol = ToleranceConfig {
        max_iter: base.max_iter.max((40.0 * (a + b).sqrt()) as usize),
        ..base
    };
    let (li, lc) = log_reg_inc_beta_with(v, a, b, &tol)?;
    Ok(if li < lc { li.exp() } else { -lc.exp_m1() })
}

/// Law of the importance weight in the i.i.d. weighted generator. Both laws
/// have mean one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightLaw {
    /// `Exp(1)`.
    Exp,
    /// Pareto with shape 3/2 and scale [`PARETO_SCALE`].
    Pareto,
}

pub const PARETO_SHAPE: f64 = 1.5;
/// Scale `x_m` giving mean `shape·x_m/(shape - 1) = 1`.
pub const PARETO_SCALE: f64 = 1.0 / 3.0;

impl WeightLaw {
    pub const ALL: [WeightLaw; 2] = [WeightLaw::Exp, WeightLaw::Pareto];

    pub fn name(self) -> &'static str {
        match self {
            WeightLaw::Exp => "exp",
            WeightLaw::Pareto => "pareto",
        }
    }

    /// Inverse-CDF draw from one uniform variate.
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        self.quantile(u)
    }

    /// Quantile function at `u ∈ [0, 1)`.
    pub fn quantile(self, u: f64) -> f64 {
        match self {
            WeightLaw::Exp => -(-u).ln_1p(),
            WeightLaw::Pareto => PARETO_SCALE * (-(-u).ln_1p() / PARETO_SHAPE).exp(),
        }
    }
}

impl fmt::Display for WeightLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WeightLaw {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        WeightLaw::ALL
            .into_iter()
            .find(|w| w.name() == s)
            .ok_or_else(|| CliError::config(format!("unknown weight law `{s}` (exp | pareto)")))
    }
}
