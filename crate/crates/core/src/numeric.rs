//! Special functions and small convex transforms used by the oracles.
//!
//! Everything that can overflow is returned as a natural logarithm.

use crate::error::{Error, Result};
use crate::math::{
    atanh, exp, expm1, lgamma, ln, ln1p, ln_beta, log1m_exp, log_add_exp, log_diff_exp, sqrt,
    LogSum,
};

/// Accuracy contract shared by the iterative kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig { rel_tol: 1e-10, abs_tol: 1e-14, max_iter: 10_000 }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !self.rel_tol.is_finite() {
            return Err(Error::Config("rel_tol must be positive"));
        }
        if !(self.abs_tol >= 0.0) || !self.abs_tol.is_finite() {
            return Err(Error::Config("abs_tol must be nonnegative"));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// `ln((1-z) e^{-λz} + z e^{λ(1-z)})`, the log moment generating function of
/// a centered Bernoulli(z).
pub fn log_h(lambda: f64, z: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&z), "z = {z}");
    if z <= 0.0 || z >= 1.0 || lambda == 0.0 {
        return 0.0;
    }
    let (base, w, mag) = if lambda >= 0.0 {
        (-lambda * z, z, lambda)
    } else {
        (lambda * (1.0 - z), 1.0 - z, -lambda)
    };
    let growth = expm1(mag);
    if growth.is_finite() {
        base + ln1p(w * growth)
    } else {
        // ln(w e^mag + 1 - w) with e^mag out of range.
        base + mag + ln(w) + ln1p((1.0 - w) / w * exp(-mag))
    }
}

/// `ψ_e(λ) = -λ - ln(1-λ)` on `[0, 1)`.
pub fn psi_e(lambda: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::domain("lambda", lambda));
    }
    Ok(-lambda - ln1p(-lambda))
}

/// Kearns–Saul sub-Gaussian variance proxy `(2p-1) / (2 ln(p/(1-p)))`.
pub fn kearns_saul(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("p", p));
    }
    Ok(kearns_saul_closed(p))
}

/// Continuous extension of [`kearns_saul`] to `[0, 1]` (zero at the ends).
pub(crate) fn kearns_saul_closed(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    // ln(p/(1-p)) = 2 atanh(2p-1)
    let x = 2.0 * p - 1.0;
    if x.abs() < 1e-6 {
        // x / (4 atanh x) = 1/4 (1 - x²/3 - 4x⁴/45 ...)
        return 0.25 * (1.0 - x * x / 3.0);
    }
    x / (4.0 * atanh(x))
}

/// Lower real branch `W₋₁` of the Lambert W function on `[-1/e, 0)`.
pub fn lambert_w_m1(x: f64) -> Result<f64> {
    lambert_w_m1_with(x, &ToleranceConfig::default())
}

pub fn lambert_w_m1_with(x: f64, tol: &ToleranceConfig) -> Result<f64> {
    let branch = -exp(-1.0);
    if !(x < 0.0) || !x.is_finite() || x < branch - 1e-16 {
        return Err(Error::domain("x", x));
    }
    // x = -e^{-u-1}
    let u = (-ln(-x) - 1.0).max(0.0);
    if u == 0.0 {
        return Ok(-1.0);
    }
    // Solve g(w) = ln(-w) + w + u + 1 = 0, increasing on w < -1.
    let g = |w: f64| ln(-w) + w + u + 1.0;
    let root2u = sqrt(2.0 * u);
    let mut lo = -1.0 - root2u - u;
    let mut hi = -1.0 - root2u - (2.0 / 3.0) * u;
    // Guard the bracket against rounding at its ends.
    let mut widen = 0;
    while g(lo) > 0.0 {
        lo = lo * 1.5 - 1.0;
        widen += 1;
        if widen > 200 {
            return Err(Error::KernelFailure { kernel: "lambert_w_m1" });
        }
    }
    while g(hi) < 0.0 {
        hi = -1.0 + (hi + 1.0) * 0.5;
        widen += 1;
        if widen > 400 {
            return Ok(hi);
        }
    }
    let mut w = 0.5 * (lo + hi);
    for _ in 0..tol.max_iter {
        let gw = g(w);
        if gw == 0.0 {
            return Ok(w);
        }
        if gw < 0.0 {
            lo = w;
        } else {
            hi = w;
        }
        let slope = 1.0 + 1.0 / w;
        let mut next = w - gw / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - w).abs();
        w = next;
        if step <= tol.rel_tol * w.abs() * 1e-3 || hi - lo <= tol.abs_tol + 1e-15 * w.abs() {
            return Ok(w);
        }
    }
    Err(Error::KernelFailure { kernel: "lambert_w_m1" })
}

const FPMIN: f64 = 1e-300;

/// `ln` of the series sum `Σ_n x^n / (a (a+1) ... (a+n))`, so that
/// `γ(a, x) = e^{-x} x^a · sum`.
fn ln_gamma_series_sum(a: f64, x: f64, tol: &ToleranceConfig) -> Result<f64> {
    let mut ap = a;
    let mut del = 1.0 / a;
    let mut sum = del;
    for _ in 0..tol.max_iter {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * tol.rel_tol * 1e-3 {
            return Ok(ln(sum));
        }
    }
    Err(Error::KernelFailure { kernel: "incomplete_gamma_series" })
}

/// `ln` of the Lentz continued fraction `h` with `Γ(a, x) = e^{-x} x^a · h`.
fn ln_gamma_cf(a: f64, x: f64, tol: &ToleranceConfig) -> Result<f64> {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=tol.max_iter {
        let i = i as f64;
        let an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < tol.rel_tol * 1e-3 {
            return Ok(ln(h));
        }
    }
    Err(Error::KernelFailure { kernel: "incomplete_gamma_cf" })
}

fn check_gamma_args(a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain("a", a));
    }
    if !(x >= 0.0) || x.is_nan() {
        return Err(Error::domain("x", x));
    }
    Ok(())
}

/// `ln Γ(a, x)`, the unregularized upper incomplete gamma function.
pub fn log_upper_inc_gamma(a: f64, x: f64) -> Result<f64> {
    log_upper_inc_gamma_with(a, x, &ToleranceConfig::default())
}

pub fn log_upper_inc_gamma_with(a: f64, x: f64, tol: &ToleranceConfig) -> Result<f64> {
    check_gamma_args(a, x)?;
    if x == 0.0 {
        return Ok(lgamma(a));
    }
    if x == f64::INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let prefix = -x + a * ln(x);
    if x < a + 1.0 {
        let lower = prefix + ln_gamma_series_sum(a, x, tol)?;
        Ok(log_diff_exp(lgamma(a), lower))
    } else {
        Ok(prefix + ln_gamma_cf(a, x, tol)?)
    }
}

/// `ln γ(a, x)`, the unregularized lower incomplete gamma function.
pub fn log_lower_inc_gamma(a: f64, x: f64) -> Result<f64> {
    log_lower_inc_gamma_with(a, x, &ToleranceConfig::default())
}

pub fn log_lower_inc_gamma_with(a: f64, x: f64, tol: &ToleranceConfig) -> Result<f64> {
    check_gamma_args(a, x)?;
    if x == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if x == f64::INFINITY {
        return Ok(lgamma(a));
    }
    let prefix = -x + a * ln(x);
    if x < a + 1.0 {
        Ok(prefix + ln_gamma_series_sum(a, x, tol)?)
    } else {
        let upper = prefix + ln_gamma_cf(a, x, tol)?;
        Ok(log_diff_exp(lgamma(a), upper))
    }
}

fn check_kummer_args(b: f64, x: f64) -> Result<()> {
    if !(b > 1.0) || !b.is_finite() {
        return Err(Error::domain("b", b));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::domain("x", x));
    }
    Ok(())
}

/// `ln ₁F₁(1; b; x)` for `b > 1`, `x >= 0`.
///
/// Uses the ascending series while `x <= b` and the incomplete gamma
/// identity `₁F₁(1; a+1; x) = e^x a x^{-a} γ(a, x)` beyond that. Near
/// `x ≈ b` the series needs `O(√b)` terms; an exhausted `max_iter` is a
/// [`Error::KernelFailure`].
pub fn log_kummer_1f1_row1(b: f64, x: f64) -> Result<f64> {
    log_kummer_1f1_row1_with(b, x, &ToleranceConfig::default())
}

pub fn log_kummer_1f1_row1_with(b: f64, x: f64, tol: &ToleranceConfig) -> Result<f64> {
    check_kummer_args(b, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x <= b {
        log_kummer_1f1_row1_series_with(b, x, tol)
    } else {
        log_kummer_1f1_row1_identity_with(b, x, tol)
    }
}

/// Series route: `Σ_n x^n / (b)_n`. Summed directly for `x ≤ b`, where no
/// term exceeds one, and in log space otherwise.
pub fn log_kummer_1f1_row1_series(b: f64, x: f64) -> Result<f64> {
    log_kummer_1f1_row1_series_with(b, x, &ToleranceConfig::default())
}

pub fn log_kummer_1f1_row1_series_with(b: f64, x: f64, tol: &ToleranceConfig) -> Result<f64> {
    check_kummer_args(b, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let stop = tol.rel_tol * 1e-3;
    if x <= b {
        // Terms x^n/(b)_n are nonincreasing from 1, so a plain sum cannot overflow.
        let (mut term, mut sum) = (1.0f64, 1.0f64);
        for n in 0..tol.max_iter {
            let denom = b + n as f64;
            term *= x / denom;
            sum += term;
            let ratio = x / (denom + 1.0);
            if term / (1.0 - ratio) <= stop * sum {
                return Ok(ln(sum));
            }
        }
        return Err(Error::KernelFailure { kernel: "kummer_series" });
    }
    let lx = ln(x);
    let mut acc = LogSum::new();
    let mut term = 0.0;
    acc.add(term);
    let stop = ln(stop);
    for n in 0..tol.max_iter {
        let denom = b + n as f64;
        term += lx - ln(denom);
        acc.add(term);
        // Once terms shrink, the remaining tail is at most term / (1 - x/(b+n+1)).
        let ratio = x / (denom + 1.0);
        if ratio < 1.0 {
            let tail = term - ln1p(-ratio);
            if tail - acc.value() < stop {
                return Ok(acc.value());
            }
        }
    }
    Err(Error::KernelFailure { kernel: "kummer_series" })
}

/// Identity route through the lower incomplete gamma function.
pub fn log_kummer_1f1_row1_identity(b: f64, x: f64) -> Result<f64> {
    log_kummer_1f1_row1_identity_with(b, x, &ToleranceConfig::default())
}

pub fn log_kummer_1f1_row1_identity_with(b: f64, x: f64, tol: &ToleranceConfig) -> Result<f64> {
    check_kummer_args(b, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    let a = b - 1.0;
    let lower = if x < a + 1.0 {
        -x + a * ln(x) + ln_gamma_series_sum(a, x, tol)?
    } else {
        let upper = -x + a * ln(x) + ln_gamma_cf(a, x, tol)?;
        log_diff_exp(lgamma(a), upper)
    };
    Ok(x + ln(a) - a * ln(x) + lower)
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn betacf(a: f64, b: f64, x: f64, tol: &ToleranceConfig) -> Result<f64> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=tol.max_iter {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < tol.rel_tol * 1e-3 {
            return Ok(h);
        }
    }
    Err(Error::KernelFailure { kernel: "incomplete_beta_cf" })
}

fn check_beta_shape(a: f64, b: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain("a", a));
    }
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::domain("b", b));
    }
    Ok(())
}

/// `(ln I_x(a, b), ln(1 - I_x(a, b)))` for the regularized incomplete beta.
/// Whichever of the two is smaller is computed directly.
pub fn log_reg_inc_beta(x: f64, a: f64, b: f64) -> Result<(f64, f64)> {
    log_reg_inc_beta_with(x, a, b, &ToleranceConfig::default())
}

pub fn log_reg_inc_beta_with(x: f64, a: f64, b: f64, tol: &ToleranceConfig) -> Result<(f64, f64)> {
    check_beta_shape(a, b)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain("x", x));
    }
    if x == 0.0 {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    if x == 1.0 {
        return Ok((0.0, f64::NEG_INFINITY));
    }
    let front = a * ln(x) + b * ln1p(-x) - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        let li = front - ln(a) + ln(betacf(a, b, x, tol)?);
        Ok((li, log1m_exp(li)))
    } else {
        let lc = front - ln(b) + ln(betacf(b, a, 1.0 - x, tol)?);
        Ok((log1m_exp(lc), lc))
    }
}

/// `ln ∫_lo^hi p^{a-1} (1-p)^{b-1} dp`. Returns `-inf` when the mass
/// underflows or the interval is empty.
pub fn log_inc_beta(lo: f64, hi: f64, a: f64, b: f64) -> Result<f64> {
    log_inc_beta_with(lo, hi, a, b, &ToleranceConfig::default())
}

pub fn log_inc_beta_with(lo: f64, hi: f64, a: f64, b: f64, tol: &ToleranceConfig) -> Result<f64> {
    check_beta_shape(a, b)?;
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(Error::Domain { what: "interval", value: hi - lo });
    }
    if lo == hi {
        return Ok(f64::NEG_INFINITY);
    }
    let lb = ln_beta(a, b);
    let (i_lo, c_lo) = log_reg_inc_beta_with(lo, a, b, tol)?;
    let (i_hi, c_hi) = log_reg_inc_beta_with(hi, a, b, tol)?;
    let half = -core::f64::consts::LN_2;
    let log_mass = if i_hi <= half {
        log_diff_exp(i_hi, i_lo)
    } else if c_lo <= half {
        log_diff_exp(c_lo, c_hi)
    } else {
        // Both tails below one half: 1 - I(lo) - (1 - I(hi)).
        log1m_exp(log_add_exp(i_lo, c_hi))
    };
    if log_mass == f64::NEG_INFINITY || log_mass.is_nan() {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(lb + log_mass)
}

/// `C(τ) = τ^τ e^{-τ} / γ(τ, τ)` in log form: the normalizer of the
/// truncated gamma mixing prior.
pub fn log_truncated_gamma_constant(tau: f64) -> Result<f64> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::domain("tau", tau));
    }
    Ok(tau * ln(tau) - tau - log_lower_inc_gamma(tau, tau)?)
}
