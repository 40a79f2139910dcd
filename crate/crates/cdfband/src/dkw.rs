//! Time-uniform DKW baseline: the Massart-constant DKW radius with a
//! `6/(π² t²)` union bound over time.

use std::f64::consts::PI;

/// Share of `alpha` spent at time `t`: `δ_t = 6α/(π² t²)`.
pub fn dkw_delta(t: u64, alpha: f64) -> f64 {
    let tf = t as f64;
    6.0 * alpha / (PI * PI * tf * tf)
}

/// Radius `√(ln(2/δ_t)/(2t))`, or `+inf` at `t = 0`.
pub fn dkw_radius(t: u64, alpha: f64) -> f64 {
    if t == 0 {
        return f64::INFINITY;
    }
    ((2.0 / dkw_delta(t, alpha)).ln() / (2.0 * t as f64)).sqrt()
}

/// `[F̂ - ε_t, F̂ + ε_t]` clipped to `[0, 1]`.
pub fn dkw_band(t: u64, alpha: f64, empirical_cdf: f64) -> (f64, f64) {
    let r = dkw_radius(t, alpha);
    ((empirical_cdf - r).max(0.0), (empirical_cdf + r).min(1.0))
}
