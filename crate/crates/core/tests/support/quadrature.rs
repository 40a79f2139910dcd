//! Independent reference values by adaptive Simpson quadrature in scaled
//! (log-peak) form. Shared by the kernel tests and the acceptance suite.
#![allow(dead_code)]

/// `ln ∫_a^b e^{f(x)} dx` where `f` attains (approximately) `peak` on the
/// interval. `breaks` are extra split points (peaks, kinks). Composite
/// Gauss-Legendre on every piece, doubling panels until two passes agree.
pub fn log_integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64], peak: f64) -> f64 {
    let g = |x: f64| (f(x) - peak).exp();
    let mut pts: Vec<f64> = vec![a, b];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let (nodes, weights) = gauss_legendre(32);
    let pass = |panels: usize| -> f64 {
        pts.windows(2)
            .map(|w| {
                let h = (w[1] - w[0]) / panels as f64;
                (0..panels)
                    .map(|i| {
                        let (l, r) = (w[0] + i as f64 * h, w[0] + (i + 1) as f64 * h);
                        let (c, half) = (0.5 * (l + r), 0.5 * (r - l));
                        nodes.iter().zip(&weights).map(|(x, wt)| wt * g(c + half * x)).sum::<f64>() * half
                    })
                    .sum::<f64>()
            })
            .sum()
    };
    let mut panels = 1;
    let mut prev = pass(panels);
    loop {
        panels *= 2;
        let next = pass(panels);
        if (next - prev).abs() <= 1e-15 * next.abs() || panels >= 1 << 12 {
            return next.ln() + peak;
        }
        prev = next;
    }
}

/// Nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = vec![0.0; n];
    let mut ws = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                xs[i] = x;
                ws[i] = 2.0 / ((1.0 - x * x) * dp * dp);
                break;
            }
        }
    }
    (xs, ws)
}

fn ln_gamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

/// `ln Γ(a, x) = ln ∫_x^∞ t^{a-1} e^{-t} dt`.
pub fn log_upper_gamma(a: f64, x: f64) -> f64 {
    let f = |t: f64| (a - 1.0) * t.ln() - t;
    let mode = (a - 1.0).max(0.0);
    let start = x.max(mode);
    let hi = start + 60.0 * a.sqrt().max(1.0) + 80.0;
    let peak = f(start.max(x));
    let s = a.sqrt().max(1.0);
    let breaks: Vec<f64> = (-8..=40).map(|i| mode + i as f64 * s).collect();
    log_integrate(&f, x, hi, &breaks, peak)
}

/// `ln γ(a, x) = ln ∫_0^x t^{a-1} e^{-t} dt`, via `u = t^a` to remove the
/// endpoint singularity: `γ(a, x) = a⁻¹ ∫_0^{x^a} e^{-u^{1/a}} du`.
pub fn log_lower_gamma(a: f64, x: f64) -> f64 {
    if a >= 1.0 {
        let f = |t: f64| if t == 0.0 { if a == 1.0 { 0.0 } else { f64::NEG_INFINITY } } else { (a - 1.0) * t.ln() - t };
        let mode = (a - 1.0).min(x);
        let s = a.sqrt().max(1.0);
        let breaks: Vec<f64> = (-40..=8).map(|i| mode + i as f64 * s).collect();
        return log_integrate(&f, 0.0, x, &breaks, f(mode.max(1e-300)));
    }
    let f = |u: f64| -u.powf(1.0 / a);
    log_integrate(&f, 0.0, x.powf(a), &[], 0.0) - a.ln()
}

/// `ln ∫_lo^hi p^{a-1} (1-p)^{b-1} dp`. Endpoint singularities (`a < 1` at
/// zero, `b < 1` at one) are removed by `p = u^{1/a}` or `1 - p = u^{1/b}`.
pub fn log_beta_integral(lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    if b < 1.0 && hi == 1.0 {
        // ∫_lo^1 p^{a-1}(1-p)^{b-1} dp = b⁻¹ ∫_0^{(1-lo)^b} (1 - u^{1/b})^{a-1} du
        let f = |u: f64| (a - 1.0) * (-u.powf(1.0 / b)).ln_1p();
        let top = (1.0 - lo).powf(b);
        let peak = f(0.0).max(f(top));
        return log_integrate(&f, 0.0, top, &[], peak) - b.ln();
    }
    if a < 1.0 && lo == 0.0 {
        return log_beta_integral(1.0 - hi, 1.0, b, a);
    }
    let f = |p: f64| {
        let l = if a == 1.0 { 0.0 } else { (a - 1.0) * p.ln() };
        let r = if b == 1.0 { 0.0 } else { (b - 1.0) * (-p).ln_1p() };
        l + r
    };
    let mode = if a + b > 2.0 { ((a - 1.0) / (a + b - 2.0)).clamp(lo, hi) } else { 0.5 * (lo + hi) };
    let sd = (a * b / ((a + b).powi(2) * (a + b + 1.0))).sqrt();
    let breaks: Vec<f64> = (-30..=30).map(|i| mode + i as f64 * sd).collect();
    let peak = [lo.max(1e-300), mode, hi.min(1.0 - 1e-16)].iter().map(|&p| f(p)).fold(f64::NEG_INFINITY, f64::max);
    log_integrate(&f, lo, hi, &breaks, peak)
}

/// `ln ₁F₁(1; b; x) = ln((b-1) ∫_0^1 e^{xt} (1-t)^{b-2} dt)` for `b ≥ 2`.
pub fn log_kummer(b: f64, x: f64) -> f64 {
    assert!(b >= 2.0);
    let f = |t: f64| if t >= 1.0 { if b == 2.0 { x } else { f64::NEG_INFINITY } } else { x * t + (b - 2.0) * (-t).ln_1p() };
    let mode = if x > b - 2.0 { 1.0 - (b - 2.0) / x } else { 0.0 };
    let w = if x > 0.0 { (b - 2.0).max(1.0).sqrt() / x.max(1.0) } else { 0.1 };
    let breaks: Vec<f64> = (-40..=40).map(|i| mode + i as f64 * w).collect();
    log_integrate(&f, 0.0, 1.0, &breaks, f(mode)) + (b - 1.0).ln()
}

/// Check that the helpers agree with closed forms.
pub fn self_check() {
    assert!((log_upper_gamma(1.0, 2.0) + 2.0).abs() < 1e-12);
    assert!((log_lower_gamma(1.0, 2.0) - (-(-2.0f64).exp_m1()).ln()).abs() < 1e-12);
    assert!((log_beta_integral(0.0, 1.0, 6.0, 3.0) - (ln_gamma(6.0) + ln_gamma(3.0) - ln_gamma(9.0))).abs() < 1e-12);
    assert!((log_kummer(2.0, 1.0) - (std::f64::consts::E - 1.0).ln()).abs() < 1e-12);
}
