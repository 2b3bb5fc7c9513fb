use minrec_core::covering::BoundOptions;
use minrec_core::flow::*;
use minrec_core::systems::{CirclePoint, Entourage, Point};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn circ(v: f64) -> f64 {
    let f = v.rem_euclid(1.0);
    f.min(1.0 - f)
}

fn dist(a: &[CirclePoint], b: &[CirclePoint]) -> f64 {
    a.iter().zip(b).map(|(x, y)| circ(x.to_f64() - y.to_f64())).fold(0.0, f64::max)
}

#[test]
fn exact_measure_matches_quadrature() {
    let flow = LinearFlow::golden_unit();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..8 {
        let x = vec![CirclePoint(rng.gen()), CirclePoint(rng.gen())];
        let r = rng.gen_range(0.02..0.3);
        let t1 = rng.gen_range(0.0..50.0);
        let t2 = t1 + rng.gen_range(10.0..100.0);
        let exact = visit_intervals(&flow, &x, &x, r, t1, t2).unwrap().total_measure;
        let quad = quadrature_measure(&flow, &x, r, t1, t2).unwrap();
        assert!((exact - quad).abs() <= 1e-6 * exact.max(1e-3), "{exact} vs {quad}");
    }
}

#[test]
fn intervals_are_sorted_disjoint_and_inside() {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let flow = LinearFlow::new("g", [1.0, g]).unwrap();
    let x = vec![CirclePoint::from_f64(0.2), CirclePoint::from_f64(0.9)];
    let vi = visit_intervals(&flow, &x, &x, 0.1, 3.0, 250.0).unwrap();
    for w in vi.intervals.windows(2) {
        assert!(w[0].1 < w[1].0);
    }
    for &(a, b) in &vi.intervals {
        assert!(3.0 <= a && a < b && b <= 250.0);
        let mid = flow.act(&x, 0.5 * (a + b)).unwrap();
        assert!(dist(&mid, &x) < 0.1);
    }
    let sum: f64 = vi.intervals.iter().map(|(a, b)| b - a).sum();
    assert!((sum - vi.total_measure).abs() < 1e-12);
}

#[test]
fn dwell_constants_hold_by_sampling() {
    let flow = LinearFlow::golden_unit();
    let radius = 0.1;
    let c = lemma16_constants(&flow, radius).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut hits = 0;
    for _ in 0..10_000 {
        let x = vec![CirclePoint(rng.gen()), CirclePoint(rng.gen())];
        let t = rng.gen_range(0.0..100.0);
        let mut start = flow.act(&[CirclePoint(rng.gen()), CirclePoint(rng.gen())], t).unwrap();
        // half the samples are placed inside δ[x] so the implication is exercised
        if rng.gen_bool(0.5) {
            start = x
                .iter()
                .map(|xi| xi.add(CirclePoint::from_f64(rng.gen_range(-0.049..0.049))))
                .collect();
        }
        if dist(&start, &x) < c.delta {
            hits += 1;
            for j in 0..=20 {
                let s = c.alpha * j as f64 / 20.0;
                assert!(dist(&flow.act(&start, s).unwrap(), &x) < radius);
            }
        }
    }
    assert!(hits > 1000);
}

#[test]
fn measured_minimum_grows_with_window() {
    let flow = LinearFlow::golden_unit();
    let x = vec![CirclePoint::ZERO; 2];
    let vi = visit_intervals(&flow, &x, &x, 0.15, 0.0, 10_000.0).unwrap();
    let mut prev = 0.0;
    for w in [100.0, 1000.0, 10_000.0] {
        let (m, _) = min_window_measure(&vi.intervals, w, 10_000.0).unwrap();
        let avg = m / w;
        assert!(avg >= prev - 1.0 / w, "W = {w}: {avg} < {prev}");
        prev = avg;
    }
}

#[test]
fn window_minimum_matches_fine_scan() {
    let flow = LinearFlow::golden_unit();
    let x = vec![CirclePoint::from_f64(0.4), CirclePoint::ZERO];
    let vi = visit_intervals(&flow, &x, &x, 0.12, 0.0, 300.0).unwrap();
    let (m, _) = min_window_measure(&vi.intervals, 40.0, 300.0).unwrap();
    let window = |a: f64| -> f64 {
        vi.intervals
            .iter()
            .map(|&(s, e)| (e.min(a + 40.0) - s.max(a)).max(0.0))
            .sum()
    };
    let scanned = (0..=26_000).map(|i| window(i as f64 * 0.01)).fold(f64::INFINITY, f64::min);
    assert!(m <= scanned + 1e-12);
    assert!(scanned - m < 0.02);
}

#[test]
fn trivial_radius_gives_full_measure() {
    let flow = LinearFlow::golden_unit();
    let grid = vec![Point::Torus(vec![CirclePoint::ZERO; 2])];
    let report = flow_uniform_bound(&flow, &Entourage::ball(1.6), &grid, "origin", 100.0, 1000.0, &BoundOptions::default()).unwrap();
    assert_eq!(report.min_measured, 1.0);
    assert!(report.certified_bound > 0.99);
}

#[test]
fn flow_bound_example() {
    let flow = LinearFlow::golden_unit();
    let grid: Vec<Point> = (0..4)
        .flat_map(|i| (0..4).map(move |j| Point::Torus(vec![CirclePoint::from_f64(i as f64 / 4.0), CirclePoint::from_f64(j as f64 / 4.0)])))
        .collect();
    let report = flow_uniform_bound(&flow, &Entourage::ball(0.15), &grid, "4x4", 1000.0, 10_000.0, &BoundOptions::default()).unwrap();
    assert!(report.violations.is_empty());
    assert!(report.margin >= 0.0);
    assert!(report.continuous);
}

#[test]
fn horizontal_flow_has_no_skeleton_cover() {
    let flow = LinearFlow::new("h", [1.0, 0.0]).unwrap();
    let grid = vec![Point::Torus(vec![CirclePoint::ZERO; 2])];
    let options = BoundOptions { k_max: 2000, ..Default::default() };
    let err = flow_uniform_bound(&flow, &Entourage::ball(0.15), &grid, "", 10.0, 100.0, &options).unwrap_err();
    assert!(matches!(err, minrec_core::Error::KMaxExceeded { .. }));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flow_law(x0 in any::<u64>(), x1 in any::<u64>(), a in 0.0f64..10_000.0, b in 0.0f64..10_000.0) {
        let flow = LinearFlow::golden_unit();
        let x = vec![CirclePoint(x0), CirclePoint(x1)];
        let direct = flow.act(&x, a + b).unwrap();
        let composed = flow.act(&flow.act(&x, b).unwrap(), a).unwrap();
        prop_assert!(dist(&direct, &composed) <= flow.accumulated_error(a) + flow.accumulated_error(b) + flow.accumulated_error(a + b));
    }
}
