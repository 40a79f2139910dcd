use cdfband_core::bands::{
    band_curve, monotonize, AtomSpec, BandPoint, BandQuery, BandSide, CurveVariant, DepthSchedule,
    SearchOptions,
};
use cdfband_core::oracles::{BernoulliOracle, OracleKind, PointwiseOracle, SubGaussianOracle};
use cdfband_core::stats::SortedCounts;
use cdfband_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ALPHA: f64 = 0.05;

fn uniform_counts(n: usize, seed: u64) -> SortedCounts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    SortedCounts::from_samples(&xs).unwrap()
}

fn side(value: f64) -> BandSide {
    BandSide { value, depth_terminated: None, depth_used: 0, budget_spent: 0.0, queries: 0 }
}

fn point(v: f64, lower: f64, upper: f64) -> BandPoint {
    BandPoint {
        v,
        lower,
        upper,
        lower_side: side(lower),
        upper_side: side(upper),
        oracle_kind: OracleKind::Bernoulli,
    }
}

#[test]
fn out_of_range_probes_are_trivial() {
    let c = uniform_counts(100, 1);
    let o = BernoulliOracle::new(&c, 1.0).unwrap();
    let q = BandQuery::new(&o);
    assert_eq!(q.upper_unit(1.5, ALPHA).unwrap().value, 1.0);
    assert_eq!(q.lower_unit(-0.1, ALPHA).unwrap().value, 0.0);
    assert_eq!(q.upper_unit(1.5, ALPHA).unwrap().queries, 0);
}

#[test]
fn point_mass_at_probe_forces_trivial_upper() {
    let c = SortedCounts::from_samples(&vec![0.5; 2000]).unwrap();
    let o = BernoulliOracle::new(&c, 1.0).unwrap();
    let q = BandQuery::new(&o);
    let u = q.upper_unit(0.5, ALPHA).unwrap();
    assert_eq!(u.value, 1.0);
    assert_eq!(u.depth_terminated, Some(1));
    let l = q.lower_unit(0.5, ALPHA).unwrap();
    assert!(l.value > 0.99, "{l:?}");
}

#[test]
fn dyadic_data_terminates_by_depth_five_at_samples_and_midpoints() {
    let xs: Vec<f64> = (0..=16).flat_map(|k| std::iter::repeat_n(k as f64 / 16.0, 7)).collect();
    let c = SortedCounts::from_samples(&xs).unwrap();
    let o = BernoulliOracle::new(&c, 1.0).unwrap();
    let q = BandQuery::new(&o);
    for i in 0..=32 {
        let v = i as f64 / 32.0;
        let u = q.upper_unit(v, ALPHA).unwrap();
        let l = q.lower_unit(v, ALPHA).unwrap();
        assert!(u.depth_terminated.unwrap() <= 5, "upper v={v}: {u:?}");
        assert!(l.depth_terminated.unwrap() <= 5, "lower v={v}: {l:?}");
    }
}

#[test]
fn termination_depth_tracks_distance_to_next_sample() {
    // Just below a sample the loop must refine until the grid separates them.
    let c = SortedCounts::from_samples(&[0.0625, 0.5]).unwrap();
    let o = BernoulliOracle::new(&c, 1.0).unwrap();
    let gap = 1e-6;
    let u = BandQuery::new(&o).upper_unit(0.0625 - gap, ALPHA).unwrap();
    let d = u.depth_terminated.unwrap();
    assert!(2f64.powi(-(d as i32)) < gap * 2.0 && 2f64.powi(-(d as i32 - 1)) >= gap, "{d}");
}

#[test]
fn reflection_identity_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let xs: Vec<f64> = (0..500).map(|_| rng.random::<f64>().powi(2)).collect();
    let mirrored: Vec<f64> = xs.iter().map(|x| 1.0 - x).collect();
    let c = SortedCounts::from_samples(&xs).unwrap();
    let m = SortedCounts::from_samples(&mirrored).unwrap();
    // No sample sits on a dyadic grid point of depth ≤ 30.
    assert!(xs.iter().all(|x| (x * 2f64.powi(30)).fract() != 0.0));
    let (o, om) = (BernoulliOracle::new(&c, 1.0).unwrap(), BernoulliOracle::new(&m, 1.0).unwrap());
    let (s, sm) = (SubGaussianOracle::new(&c, 1.0).unwrap(), SubGaussianOracle::new(&m, 1.0).unwrap());
    for i in 0..=64 {
        let v = i as f64 / 64.0;
        let u = BandQuery::new(&o).upper_unit(v, ALPHA).unwrap();
        let l = BandQuery::new(&om).lower_unit(1.0 - v, ALPHA).unwrap();
        assert_eq!(u.value, 1.0 - l.value, "v={v}");
        assert_eq!(u.depth_terminated, l.depth_terminated);
        let u = BandQuery::new(&s).upper_unit(v, ALPHA).unwrap();
        let l = BandQuery::new(&sm).lower_unit(1.0 - v, ALPHA).unwrap();
        // The sub-Gaussian lower bound is itself a complement: one rounding.
        assert!((u.value - (1.0 - l.value)).abs() <= f64::EPSILON, "v={v}");
        assert_eq!(u.depth_terminated, l.depth_terminated);
    }
}

#[test]
fn real_line_weights_sum_to_one() {
    let c = 3.0 / (std::f64::consts::PI.powi(2) - 3.0);
    let kmax = 1_000_000u64;
    // Sum smallest terms first.
    let mut s = 0.0;
    for k in (1..=kmax).rev() {
        let d = 1.0 + k as f64;
        s += 2.0 * c / (d * d);
    }
    s += c;
    // Tail Σ_{n > N} 1/n² with N = kmax + 1, accurate to O(N^{-3}).
    let n = (kmax + 1) as f64;
    let tail = 1.0 / n - 1.0 / (2.0 * n * n) + 1.0 / (6.0 * n * n * n);
    assert!((s + 2.0 * c * tail - 1.0).abs() <= 1e-9, "{}", s + 2.0 * c * tail);
    // Depth weights 2^{-d} complete the ledger.
    let sched = DepthSchedule::default();
    let total: f64 = (1..=60).map(|d| sched.real_line_budget(1.0, d, 0.0) / c).sum();
    assert!((total - 1.0).abs() < 1e-15);
}

#[test]
fn unit_budget_family_sums_to_alpha_for_base_two() {
    let sched = DepthSchedule::default();
    let total: f64 = (1..=80).map(|d| sched.cells(d) * sched.unit_budget(ALPHA, d)).sum();
    assert!((total - ALPHA).abs() < 1e-15);
    assert_eq!(sched.unit_total(ALPHA), ALPHA);
    let three = DepthSchedule::new(3).unwrap();
    let total: f64 = (1..=60).map(|d| three.cells(d) * three.unit_budget(ALPHA, d)).sum();
    assert!((total - three.unit_total(ALPHA)).abs() < 1e-15);
    assert!(DepthSchedule::new(1).is_err());
}

#[test]
fn real_line_at_origin_matches_unit_interval_closely() {
    let c = uniform_counts(2000, 3);
    let o = BernoulliOracle::new(&c, 1.0).unwrap();
    let q = BandQuery::new(&o);
    for &v in &[0.0, 0.1, 0.25, 0.5, 0.9] {
        let (uu, ur) = (q.upper_unit(v, ALPHA).unwrap(), q.upper_real_line(v, ALPHA).unwrap());
        let (lu, lr) = (q.lower_unit(v, ALPHA).unwrap(), q.lower_real_line(v, ALPHA).unwrap());
        assert!((uu.value - ur.value).abs() < 0.03, "v={v}: {uu:?} {ur:?}");
        assert!((lu.value - lr.value).abs() < 0.03, "v={v}: {lu:?} {lr:?}");
    }
}

#[test]
fn origin_shift_keeps_counts_and_helps() {
    // All data far to the right: a negative probe shifts to the origin.
    let c = SortedCounts::from_samples(&vec![5.0; 100]).unwrap();
    let o = BernoulliOracle::new(&c, 1.0).unwrap();
    let q = BandQuery::new(&o);
    let u = q.upper_real_line(-1000.0, ALPHA).unwrap();
    assert!(u.value < 0.1, "{u:?}");
    // Mirror: data far left, large positive probe.
    let c = SortedCounts::from_samples(&vec![-5.0; 100]).unwrap();
    let o = BernoulliOracle::new(&c, 1.0).unwrap();
    let l = BandQuery::new(&o).lower_real_line(1000.0, ALPHA).unwrap();
    assert!(l.value > 0.9, "{l:?}");
}

#[test]
fn budget_ledger_never_exceeds_allocation() {
    let c = uniform_counts(500, 4);
    let o = BernoulliOracle::new(&c, 1.0).unwrap();
    let q = BandQuery::new(&o);
    for i in 0..=50 {
        let v = -0.5 + i as f64 * 0.04;
        for s in [
            q.upper_unit(v, ALPHA).unwrap(),
            q.lower_unit(v, ALPHA).unwrap(),
            q.upper_real_line(v, ALPHA).unwrap(),
            q.lower_real_line(v, ALPHA).unwrap(),
        ] {
            assert!(s.budget_spent <= ALPHA, "{s:?}");
        }
    }
}

#[test]
fn no_atoms_equals_unit_interval() {
    let c = uniform_counts(300, 5);
    let o = BernoulliOracle::new(&c, 1.0).unwrap();
    let q = BandQuery::new(&o);
    for &v in &[0.0, 0.3, 0.77, 1.0] {
        let (l, u) = q.with_atoms(v, ALPHA, &AtomSpec::none()).unwrap();
        assert_eq!(l, q.lower_unit(v, ALPHA).unwrap());
        assert_eq!(u, q.upper_unit(v, ALPHA).unwrap());
    }
}

#[test]
fn atom_at_the_mass_point_tightens_the_band() {
    let c = SortedCounts::from_samples(&vec![0.5; 400]).unwrap();
    let o = BernoulliOracle::new(&c, 1.0).unwrap();
    let q = BandQuery::new(&o);
    let atoms = AtomSpec::new(vec![(0.5, 0.5)]).unwrap();
    let (la, ua) = q.with_atoms(0.5, ALPHA, &atoms).unwrap();
    let plain = q.lower_unit(0.5, ALPHA).unwrap();
    assert!(la.value > plain.value, "{la:?} vs {plain:?}");
    assert!(la.budget_spent <= ALPHA && ua.budget_spent <= ALPHA);
    // Above the data the atom carries no information for the upper side.
    let (_, u_below) = q.with_atoms(0.49, ALPHA, &atoms).unwrap();
    assert_eq!(u_below.value, q.upper_unit(0.49, ALPHA * 0.5).unwrap().value);
}

#[test]
fn atom_spec_validation_and_order() {
    assert!(AtomSpec::new(vec![(0.1, 0.0)]).is_err());
    assert!(AtomSpec::new(vec![(0.1, 0.7), (0.2, 0.4)]).is_err());
    let a = AtomSpec::new(vec![(0.1, 0.1), (0.2, 0.3), (0.3, 0.2)]).unwrap();
    let z: Vec<f64> = a.atoms().iter().map(|a| a.1).collect();
    assert_eq!(z, vec![0.3, 0.2, 0.1]);
    assert!((a.continuous_mass() - 0.4).abs() < 1e-15);
}

#[test]
fn monotonize_examples() {
    let mut pts = vec![point(0.2, 0.1, 0.5), point(0.3, 0.2, 0.4)];
    monotonize(&mut pts);
    assert_eq!((pts[0].upper, pts[1].upper), (0.4, 0.4));
    let mono = vec![point(0.1, 0.0, 0.3), point(0.2, 0.1, 0.6), point(0.3, 0.5, 0.9)];
    let mut same = mono.clone();
    monotonize(&mut same);
    assert_eq!(same, mono);
}

#[test]
fn band_curve_single_point_and_idempotence() {
    let c = uniform_counts(400, 6);
    let o = BernoulliOracle::new(&c, 1.0).unwrap();
    let sched = DepthSchedule::default();
    let one = band_curve(&[0.4], ALPHA, &o, &CurveVariant::UnitInterval, sched).unwrap();
    let q = BandQuery::new(&o);
    assert_eq!(one[0].upper, q.upper_unit(0.4, ALPHA / 2.0).unwrap().value);
    assert_eq!(one[0].lower, q.lower_unit(0.4, ALPHA / 2.0).unwrap().value);
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let a = band_curve(&grid, ALPHA, &o, &CurveVariant::UnitInterval, sched).unwrap();
    let b = band_curve(&grid, ALPHA, &o, &CurveVariant::UnitInterval, sched).unwrap();
    assert_eq!(a, b);
    for w in a.windows(2) {
        assert!(w[0].upper <= w[1].upper && w[0].lower <= w[1].lower);
    }
    for p in &a {
        assert!(0.0 <= p.lower && p.lower <= p.upper && p.upper <= 1.0);
    }
    assert!(matches!(
        band_curve(&[0.5, 0.4], ALPHA, &o, &CurveVariant::UnitInterval, sched),
        Err(Error::Config(_))
    ));
}

#[test]
fn cache_does_not_change_answers() {
    let c = uniform_counts(300, 8);
    let o = BernoulliOracle::new(&c, 1.0).unwrap();
    let grid: Vec<f64> = (0..=50).map(|i| i as f64 / 50.0).collect();
    let curve = band_curve(&grid, ALPHA, &o, &CurveVariant::RealLine, DepthSchedule::default()).unwrap();
    let q = BandQuery::new(&o);
    let mut raw: Vec<BandPoint> = grid
        .iter()
        .map(|&v| {
            let (l, u) = (q.lower_real_line(v, ALPHA / 2.0).unwrap(), q.upper_real_line(v, ALPHA / 2.0).unwrap());
            BandPoint { v, lower: l.value, upper: u.value, lower_side: l, upper_side: u, oracle_kind: o.kind() }
        })
        .collect();
    monotonize(&mut raw);
    assert_eq!(curve, raw);
}

fn sample_stream(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| match rng.random_range(0..3) {
            // Mix continuous values, dyadic ties and repeated values.
            0 => rng.random::<f64>(),
            1 => rng.random_range(0..16) as f64 / 16.0,
            _ => 0.3,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn monotonize_matches_brute_force(raw in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..40)) {
        let mut pts: Vec<BandPoint> = raw
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| point(i as f64, a.min(b), a.max(b)))
            .collect();
        let orig = pts.clone();
        monotonize(&mut pts);
        for i in 0..pts.len() {
            let up = orig[i..].iter().map(|p| p.upper).fold(1.0, f64::min);
            let lo = orig[..=i].iter().map(|p| p.lower).fold(0.0, f64::max);
            prop_assert_eq!(pts[i].upper, up);
            prop_assert_eq!(pts[i].lower, lo);
            prop_assert!(pts[i].upper <= orig[i].upper && pts[i].lower >= orig[i].lower);
        }
    }

    #[test]
    fn extra_depths_never_tighten(seed in 0u64..1000, n in 1usize..200, v in -0.2f64..1.2) {
        let c = SortedCounts::from_samples(&sample_stream(seed, n)).unwrap();
        let o = BernoulliOracle::new(&c, 1.0).unwrap();
        let base = BandQuery::new(&o);
        let deep = BandQuery::new(&o).options(SearchOptions { extra_depths: 10 });
        for v in [v, (v * 16.0).round() / 16.0] {
            prop_assert_eq!(base.upper_unit(v, ALPHA).unwrap().value, deep.upper_unit(v, ALPHA).unwrap().value);
            prop_assert_eq!(base.lower_unit(v, ALPHA).unwrap().value, deep.lower_unit(v, ALPHA).unwrap().value);
            prop_assert_eq!(base.upper_real_line(v, ALPHA).unwrap().value, deep.upper_real_line(v, ALPHA).unwrap().value);
            prop_assert_eq!(base.lower_real_line(v, ALPHA).unwrap().value, deep.lower_real_line(v, ALPHA).unwrap().value);
        }
    }

    #[test]
    fn bounds_are_ordered(seed in 0u64..1000, n in 1usize..200, v in -0.2f64..1.2) {
        let c = SortedCounts::from_samples(&sample_stream(seed, n)).unwrap();
        let o = BernoulliOracle::new(&c, 1.0).unwrap();
        let q = BandQuery::new(&o);
        let f = c.count_le(v) as f64 / n as f64;
        let (l, u) = (q.lower_unit(v, ALPHA).unwrap().value, q.upper_unit(v, ALPHA).unwrap().value);
        prop_assert!(0.0 <= l && l <= f && f <= u && u <= 1.0, "{} {} {}", l, f, u);
        let (l, u) = (q.lower_real_line(v, ALPHA).unwrap().value, q.upper_real_line(v, ALPHA).unwrap().value);
        prop_assert!(0.0 <= l && l <= f && f <= u && u <= 1.0, "{} {} {}", l, f, u);
    }
}
