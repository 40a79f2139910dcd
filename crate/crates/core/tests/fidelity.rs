#[path = "support/raw.rs"]
mod raw;

use cdfband_core::oracles::ddrm::{self, BetGrid};
use cdfband_core::oracles::{
    BernoulliOracle, DdrmOracle, EmpBernOracle, PointwiseOracle, SubGaussianOracle,
};
use cdfband_core::stats::{SortedCounts, WeightedStreamStats, DEFAULT_GRANULARITY};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const K: f64 = DEFAULT_GRANULARITY;

/// Random weighted stream: ties, zero weights and heavy tails included.
fn stream(rng: &mut ChaCha8Rng) -> Vec<(f64, f64)> {
    let t = rng.random_range(1..=200);
    (0..t)
        .map(|_| {
            let u: f64 = rng.random();
            let w = match rng.random_range(0..4) {
                0 => 0.0,
                1 => -u.max(1e-300).ln(),
                2 => (1.0 / 3.0) * (1.0 - u).powf(-2.0 / 3.0),
                _ => 1.0,
            };
            let x = if rng.random_bool(0.5) { rng.random_range(0..8) as f64 / 8.0 } else { rng.random() };
            (w, x)
        })
        .collect()
}

fn freeze(s: &[(f64, f64)]) -> cdfband_core::stats::FrozenTailStats {
    let mut ws = WeightedStreamStats::new(K).unwrap();
    for &(w, x) in s {
        ws.update(w, x).unwrap();
    }
    ws.freeze()
}

fn probe(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let rho = if rng.random_bool(0.5) { rng.random_range(0..8) as f64 / 8.0 } else { rng.random_range(-0.1..1.1) };
    let delta = 10f64.powf(rng.random_range(-6.0..-0.5));
    (rho, delta)
}

fn check(name: &str, i: usize, got: (f64, f64), want: (f64, f64)) {
    assert!(raw::rel_close(got.0, want.0, 1e-9), "{name} lower #{i}: {} vs {}", got.0, want.0);
    assert!(raw::rel_close(got.1, want.1, 1e-9), "{name} upper #{i}: {} vs {}", got.1, want.1);
}

#[test]
fn unweighted_oracles_match_raw_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..100 {
        let xs: Vec<f64> = stream(&mut rng).into_iter().map(|p| p.1).collect();
        let c = SortedCounts::from_samples(&xs).unwrap();
        let (rho, delta) = probe(&mut rng);
        let b = BernoulliOracle::new(&c, 1.0).unwrap();
        check("bernoulli", i, (b.lower(rho, delta).unwrap(), b.upper(rho, delta).unwrap()), raw::bernoulli(&xs, rho, delta, 1.0));
        let s = SubGaussianOracle::new(&c, 1.0).unwrap();
        check("subgaussian", i, (s.lower(rho, delta).unwrap(), s.upper(rho, delta).unwrap()), raw::subgaussian(&xs, rho, delta, 1.0));
    }
}

#[test]
fn weighted_oracles_match_raw_recomputation() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let grid = BetGrid::default();
    for i in 0..100 {
        let s = stream(&mut rng);
        let f = freeze(&s);
        let (rho, delta) = probe(&mut rng);
        let e = EmpBernOracle::new(&f, 1.0).unwrap();
        check("empbern", i, (e.lower(rho, delta).unwrap(), e.upper(rho, delta).unwrap()), raw::empbern(&s, rho, delta, 1.0));
        let d = DdrmOracle::new(&f, grid.clone()).unwrap();
        check("ddrm", i, (d.lower(rho, delta).unwrap(), d.upper(rho, delta).unwrap()), raw::ddrm(&s, rho, delta, K, &grid));
    }
}

#[test]
fn frozen_views_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let s = stream(&mut rng);
        let f = freeze(&s);
        let (rho, _) = probe(&mut rng);
        for (view, pred) in [
            (f.view_le(rho), Box::new(|x: f64| x <= rho) as Box<dyn Fn(f64) -> bool>),
            (f.view_gt(rho), Box::new(|x: f64| x > rho)),
            (f.view_lt(rho), Box::new(|x: f64| x < rho)),
            (f.view_ge(rho), Box::new(|x: f64| x >= rho)),
        ] {
            let ys: Vec<f64> = s.iter().map(|&(w, x)| if pred(x) { w } else { 0.0 }).collect();
            assert_eq!(view.t, s.len() as u64);
            assert_eq!(view.positive, ys.iter().filter(|&&y| y > 0.0).count() as u64);
            assert!(raw::rel_close(view.sum, ys.iter().sum(), 1e-12));
            assert!(raw::rel_close(view.sum_sq, ys.iter().map(|y| y * y).sum(), 1e-12));
            for &lambda in &[0.5, 0.125, 1.0 / 1024.0] {
                let ystar = (view.sum / view.t as f64).min(1.0);
                let got = view.log_sum_lower_bound(lambda, ystar);
                let want = raw::bucketed_log_sum_raw(K, &ys, lambda, ystar);
                assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()), "{got} vs {want}");
            }
        }
    }
}

#[test]
fn snapshot_is_permutation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let grid = BetGrid::default();
    for _ in 0..30 {
        let s = stream(&mut rng);
        let mut shuffled = s.clone();
        shuffled.shuffle(&mut rng);
        let (a, b) = (freeze(&s), freeze(&shuffled));
        assert_eq!(a.counts(), b.counts());
        let (rho, delta) = probe(&mut rng);
        let (da, db) = (DdrmOracle::new(&a, grid.clone()).unwrap(), DdrmOracle::new(&b, grid.clone()).unwrap());
        assert!(raw::rel_close(da.upper(rho, delta).unwrap(), db.upper(rho, delta).unwrap(), 1e-9));
        let (ea, eb) = (EmpBernOracle::new(&a, 1.0).unwrap(), EmpBernOracle::new(&b, 1.0).unwrap());
        assert!(raw::rel_close(ea.lower(rho, delta).unwrap(), eb.lower(rho, delta).unwrap(), 1e-9));
    }
}

#[test]
fn bucketed_wealth_never_overshoots_exact_wealth() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let grid = BetGrid::default();
    for _ in 0..100 {
        let s = stream(&mut rng);
        let f = freeze(&s);
        let (rho, _) = probe(&mut rng);
        let view = f.view_le(rho);
        let ys: Vec<f64> = s.iter().map(|&(w, x)| if x <= rho { w } else { 0.0 }).collect();
        let ystar = ddrm::clipped_mean(view.t, view.sum);
        let m = rng.random::<f64>();
        for &lambda in grid.lambdas() {
            let exact_sum = raw::exact_log_sum(&ys, lambda, ystar);
            let exact = ddrm::log_wealth_from_log_sum(lambda, view.t, view.sum, m, exact_sum);
            let bucketed = ddrm::log_wealth(&view, lambda, m);
            // Slack covers summation-order rounding only.
            assert!(bucketed <= exact + 1e-12 * (1.0 + exact.abs()), "λ={lambda}: {bucketed} > {exact}");
        }
    }
}
