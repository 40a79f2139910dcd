//! Thin wrappers over `libm` plus log-space helpers. Keeping every float
//! primitive here lets the rest of the crate stay `no_std`.

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}
#[inline]
pub(crate) fn ln1p(x: f64) -> f64 {
    libm::log1p(x)
}
#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}
#[inline]
pub(crate) fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}
#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}
#[inline]
pub(crate) fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}
#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}
#[inline]
pub(crate) fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}
#[inline]
pub(crate) fn atanh(x: f64) -> f64 {
    libm::atanh(x)
}
#[inline]
pub(crate) fn lgamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

/// `ln B(a, b)`.
#[inline]
pub(crate) fn ln_beta(a: f64, b: f64) -> f64 {
    lgamma(a) + lgamma(b) - lgamma(a + b)
}

/// `ln(e^a + e^b)`.
#[inline]
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if hi == f64::INFINITY {
        return f64::INFINITY;
    }
    hi + ln1p(exp(lo - hi))
}

/// `ln(e^a - e^b)` for `a >= b`; `-inf` when the difference is not positive.
#[inline]
pub(crate) fn log_diff_exp(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    if !(a > b) {
        return f64::NEG_INFINITY;
    }
    a + log1m_exp(b - a)
}

/// `ln(1 - e^x)` for `x <= 0`, accurate on both sides of `-ln 2`.
#[inline]
pub(crate) fn log1m_exp(x: f64) -> f64 {
    if x >= 0.0 {
        f64::NEG_INFINITY
    } else if x > -core::f64::consts::LN_2 {
        ln(-expm1(x))
    } else {
        ln1p(-exp(x))
    }
}

/// Running log-sum-exp accumulator that never overflows.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSum {
    reference: f64,
    scaled: f64,
}

impl LogSum {
    pub(crate) fn new() -> Self {
        LogSum { reference: f64::NEG_INFINITY, scaled: 0.0 }
    }

    pub(crate) fn add(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        if log_term > self.reference {
            self.scaled = self.scaled * exp(self.reference - log_term) + 1.0;
            self.reference = log_term;
        } else {
            self.scaled += exp(log_term - self.reference);
        }
    }

    pub(crate) fn value(&self) -> f64 {
        if self.scaled == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.reference + ln(self.scaled)
        }
    }
}
