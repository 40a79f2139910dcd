//! Raw-stream recomputation of every oracle, sample by sample, without the
//! frozen prefix/suffix summaries. Shared by the fidelity tests and the
//! acceptance suite.
#![allow(dead_code)]

use cdfband_core::numeric::log_inc_beta;
use cdfband_core::oracles::bisect_rejection;
use cdfband_core::oracles::ddrm::{self, BetGrid};
use cdfband_core::oracles::empbern::{self, upper_from_complement};
use cdfband_core::oracles::subgaussian;
use cdfband_core::stats::weighted::{bucket_edge, locate};

/// `ln W(q)` accumulated through the sequential predictive probabilities of
/// the truncated Beta-Binomial mixture.
pub fn bernoulli_log_wealth_sequential(ys: &[bool], q: f64, b: f64) -> f64 {
    let (mut n1, mut n0) = (0.0, 0.0);
    let mut lw = 0.0;
    for &y in ys {
        let (a0, b0) = (b * q + n1, b * (1.0 - q) + n0);
        let den = log_inc_beta(q, 1.0, a0, b0).unwrap();
        if y {
            lw += log_inc_beta(q, 1.0, a0 + 1.0, b0).unwrap() - den - q.ln();
            n1 += 1.0;
        } else {
            lw += log_inc_beta(q, 1.0, a0, b0 + 1.0).unwrap() - den - (-q).ln_1p();
            n0 += 1.0;
        }
    }
    lw
}

fn bernoulli_lower_raw(ys: &[bool], delta: f64, b: f64) -> f64 {
    if delta >= 1.0 {
        return 0.0;
    }
    let t = ys.len() as f64;
    let n1 = ys.iter().filter(|&&y| y).count() as f64;
    if n1 == 0.0 {
        return 0.0;
    }
    let threshold = -delta.ln();
    let q_hat = n1 / t;
    bisect_rejection(0.0, q_hat, false, |q| Ok(bernoulli_log_wealth_sequential(ys, q, b) >= threshold))
        .unwrap()
        .clamp(0.0, q_hat)
}

/// `(lower, upper)` of the Beta-Binomial oracle at `rho`.
pub fn bernoulli(xs: &[f64], rho: f64, delta: f64, b: f64) -> (f64, f64) {
    let ys: Vec<bool> = xs.iter().map(|&x| x <= rho).collect();
    let comp: Vec<bool> = ys.iter().map(|y| !y).collect();
    (bernoulli_lower_raw(&ys, delta, b), 1.0 - bernoulli_lower_raw(&comp, delta, b))
}

pub fn subgaussian(xs: &[f64], rho: f64, delta: f64, tau: f64) -> (f64, f64) {
    let t = xs.len() as u64;
    let n1 = xs.iter().filter(|&&x| x <= rho).count() as u64;
    (
        subgaussian::lower_from_counts(n1, t, delta, tau).unwrap(),
        subgaussian::upper_from_counts(n1, t, delta, tau).unwrap(),
    )
}

fn empbern_lower_raw(ys: &[f64], delta: f64, tau: f64) -> f64 {
    let t = ys.len() as f64;
    let sum: f64 = ys.iter().sum();
    let y_star = (sum / t).min(1.0);
    let square_sum: f64 = ys.iter().map(|y| (y - y_star) * (y - y_star)).sum();
    empbern::lower_from_moments(ys.len() as u64, sum, square_sum, delta, tau).unwrap()
}

pub fn empbern(stream: &[(f64, f64)], rho: f64, delta: f64, tau: f64) -> (f64, f64) {
    let ys: Vec<f64> = stream.iter().map(|&(w, x)| if x <= rho { w } else { 0.0 }).collect();
    let comp: Vec<f64> = stream.iter().map(|&(w, x)| if x > rho { w } else { 0.0 }).collect();
    let q_hat = ys.iter().sum::<f64>() / ys.len() as f64;
    let lower = empbern_lower_raw(&ys, delta, tau);
    let upper = if delta >= 1.0 { 1.0 } else { upper_from_complement(q_hat, empbern_lower_raw(&comp, delta, tau)) };
    (lower, upper)
}

/// Per-sample strong-concavity bound on `ln(1 + λ(y - ŷ))`, `y > 0`.
pub fn bucket_term(k: f64, y: f64, lambda: f64, y_star: f64) -> f64 {
    let (n, alpha) = locate(k, y).unwrap();
    let (zl, zu) = (bucket_edge(k, n), bucket_edge(k, n + 1));
    let fl = (lambda * (zl - y_star)).ln_1p();
    let fu = (lambda * (zu - y_star)).ln_1p();
    let curv = k * zl * lambda / (1.0 - lambda * y_star + lambda * (1.0 + k) * zl);
    alpha * fl + (1.0 - alpha) * fu + 0.5 * alpha * (1.0 - alpha) * curv * curv
}

/// Bucketed `Σ ln(1 + λ(Y - ŷ))` recomputed one sample at a time.
pub fn bucketed_log_sum_raw(k: f64, ys: &[f64], lambda: f64, y_star: f64) -> f64 {
    ys.iter()
        .map(|&y| if y > 0.0 { bucket_term(k, y, lambda, y_star) } else { (-lambda * y_star).ln_1p() })
        .sum()
}

/// Exact `Σ ln(1 + λ(Y - ŷ))`.
pub fn exact_log_sum(ys: &[f64], lambda: f64, y_star: f64) -> f64 {
    ys.iter().map(|&y| (lambda * (y - y_star)).ln_1p()).sum()
}

fn ddrm_lower_raw(ys: &[f64], delta: f64, k: f64, grid: &BetGrid) -> f64 {
    if delta >= 1.0 {
        return 0.0;
    }
    let t = ys.len() as u64;
    let sum: f64 = ys.iter().sum();
    let y_star = ddrm::clipped_mean(t, sum);
    let mut log_sum = |lambda: f64| bucketed_log_sum_raw(k, ys, lambda, y_star);
    ddrm::lower_with(t, sum, -delta.ln(), grid, &mut log_sum).unwrap()
}

pub fn ddrm(stream: &[(f64, f64)], rho: f64, delta: f64, k: f64, grid: &BetGrid) -> (f64, f64) {
    let ys: Vec<f64> = stream.iter().map(|&(w, x)| if x <= rho { w } else { 0.0 }).collect();
    let comp: Vec<f64> = stream.iter().map(|&(w, x)| if x > rho { w } else { 0.0 }).collect();
    let q_hat = ys.iter().sum::<f64>() / ys.len() as f64;
    let lower = ddrm_lower_raw(&ys, delta, k, grid);
    let upper = if delta >= 1.0 { 1.0 } else { upper_from_complement(q_hat, ddrm_lower_raw(&comp, delta, k, grid)) };
    (lower, upper)
}

/// `|a - b| ≤ tol·max(|a|, |b|)`, with exact equality for zeros.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    a == b || (a - b).abs() <= tol * a.abs().max(b.abs())
}
