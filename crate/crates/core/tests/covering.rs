use std::collections::BTreeSet;

use minrec_core::covering::*;
use minrec_core::systems::*;
use minrec_core::Error;
use proptest::prelude::*;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Smallest K whose sorted orbit {kα} has every circular gap < 2r, recomputing
/// the whole gap list for each K.
fn gap_scan_k(alpha: f64, radius: f64) -> u64 {
    for k in 0u64.. {
        let mut pts: Vec<f64> = (0..=k).map(|j| (j as f64 * alpha).rem_euclid(1.0)).collect();
        pts.sort_by(f64::total_cmp);
        let mut gap = 1.0 - pts[pts.len() - 1] + pts[0];
        for w in pts.windows(2) {
            gap = f64::max(gap, w[1] - w[0]);
        }
        if gap < 2.0 * radius {
            return k;
        }
    }
    unreachable!()
}

/// Smallest K such that every factor of length K + depth of a long prefix
/// contains every factor of length depth.
fn repetitivity_scan(sub: &SubstitutionSystem, depth: usize) -> u64 {
    let text = sub.fixed_point_prefix(100_000);
    let words: BTreeSet<&[u8]> = text.windows(depth).collect();
    for k in 0u64.. {
        let n = k as usize + depth;
        let long: BTreeSet<&[u8]> = text.windows(n).collect();
        if long.iter().all(|l| words.iter().all(|w| l.windows(depth).any(|f| f == *w))) {
            return k;
        }
    }
    unreachable!()
}

#[test]
fn golden_constants_match_gap_scan() {
    let rot = RotationSystem::golden();
    for r in [0.3, 0.2, 0.1, 0.05, 0.02, 0.01] {
        let cert = rotation_covering_k(&rot, r, DEFAULT_K_MAX).unwrap();
        assert_eq!(cert.k, gap_scan_k(GOLDEN, r), "radius {r}");
    }
    assert_eq!(rotation_covering_k(&rot, 0.05, DEFAULT_K_MAX).unwrap().k, 12);
    let beta = RotationSystem::new("beta", AlphaSpec::GoldenComplement).unwrap();
    assert_eq!(rotation_covering_k(&beta, 0.3, DEFAULT_K_MAX).unwrap().k, 2);
}

#[test]
fn covering_constant_agrees_with_first_return_data() {
    // every window of K+1 steps holds a visit, so the max gap is at most K
    let rot = RotationSystem::golden();
    let sys = SystemDescriptor::Rotation(rot.clone());
    let k = rotation_covering_k(&rot, 0.05, DEFAULT_K_MAX).unwrap().k;
    let x = Point::Circle(CirclePoint::ZERO);
    let p = minrec_core::returns::return_set(
        &sys,
        &x,
        &x,
        &Entourage::ball(0.05),
        minrec_core::returns::Window::new(0, 100_000).unwrap(),
    )
    .unwrap();
    assert!(p.max_gap <= k);
    assert!(p.first_return().unwrap() <= k + 1);
}

#[test]
fn subshift_constants_match_scan() {
    let fib = SubstitutionSystem::fibonacci();
    let tm = SubstitutionSystem::thue_morse();
    for depth in 1..=6 {
        assert_eq!(subshift_covering_k(&fib, depth, 10_000).unwrap().k, repetitivity_scan(&fib, depth), "fib {depth}");
    }
    for depth in 1..=4 {
        assert_eq!(subshift_covering_k(&tm, depth, 10_000).unwrap().k, repetitivity_scan(&tm, depth), "tm {depth}");
    }
    assert_eq!(subshift_covering_k(&fib, 1, 100).unwrap().k, 2);
    assert_eq!(subshift_covering_k(&fib, 3, 100).unwrap().k, 7);
    assert_eq!(subshift_covering_k(&tm, 2, 100).unwrap().k, 7);
}

#[test]
fn certified_bound_values() {
    let mut cert = rotation_covering_k(&RotationSystem::golden(), 0.3, 10).unwrap();
    assert_eq!(certified_bound(&cert), num_rational::Rational64::new(1, 3));
    cert.k = 0;
    assert_eq!(certified_bound(&cert), num_rational::Rational64::new(1, 1));
    cert.k = 33;
    assert_eq!(certified_bound(&cert), num_rational::Rational64::new(1, 34));
}

#[test]
fn minimality_witnesses_fail_the_covering_test() {
    let cert = rotation_covering_k(&RotationSystem::golden(), 0.05, DEFAULT_K_MAX).unwrap();
    match cert.evidence {
        Evidence::Rotation { sorted_orbit, max_gap, witness_gap } => {
            assert_eq!(sorted_orbit.len(), 13);
            assert!(max_gap < 0.1);
            assert!(witness_gap.unwrap() >= 0.1);
        }
        other => panic!("{other:?}"),
    }
    let fib = SubstitutionSystem::fibonacci();
    let cert = subshift_covering_k(&fib, 3, 100).unwrap();
    match cert.evidence {
        Evidence::Subshift { witness: Some(w), .. } => {
            assert_eq!(w.word.len(), 9);
            assert!(!w.word.contains(&w.missing));
            let legal = fib.language_words(9, 64).unwrap();
            assert!(legal.iter().any(|l| fib.render(l) == w.word));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn rational_rotation_refusal_propagates() {
    let third = SystemDescriptor::Rotation(RotationSystem::new("third", AlphaSpec::Rational { p: 1, q: 3 }).unwrap());
    let eps = Entourage::ball(0.15);
    let (grid, note) = default_grid(&third, &eps, 10).unwrap();
    let err = verify_uniform_bound(&third, &eps, &grid, &note, 100, 1000, &BoundOptions::default()).unwrap_err();
    assert!(matches!(err, Error::NotMinimal { .. }));
}

#[test]
fn golden_uniform_bound_example() {
    let sys = SystemDescriptor::Rotation(RotationSystem::golden());
    let eps = Entourage::ball(0.15);
    let (grid, note) = default_grid(&sys, &eps, 100).unwrap();
    let report = verify_uniform_bound(&sys, &eps, &grid, &note, 10_000, 100_000, &BoundOptions::default()).unwrap();
    assert_eq!(report.covering_size, 13);
    assert!(report.points.iter().all(|p| p.margin >= 0.0));
    assert!(report.violations.is_empty());
    let spot = report.spot_check.unwrap();
    assert_eq!(spot.checked_pairs, 100 * 1000);
    assert_eq!(spot.failures, 0);
}

#[test]
fn fibonacci_uniform_bound_example() {
    let fib = SubstitutionSystem::fibonacci();
    let sys = SystemDescriptor::Substitution(fib.clone());
    let eps = Entourage::cylinder(3);
    let grid: Vec<Point> = (0..50).map(|o| Point::Symbolic(fib.point(o * 7))).collect();
    let report = verify_uniform_bound(&sys, &eps, &grid, "50 offsets", 10_000, 100_000, &BoundOptions::default()).unwrap();
    assert_eq!(report.covering_size, 8);
    assert!(report.violations.is_empty());
    assert!(report.min_measured >= 1.0 / 8.0);
    assert_eq!(report.spot_check.unwrap().failures, 0);
}

#[test]
fn two_torus_translation_spot_check() {
    let act = TorusZdAction::new("line", &[vec![AlphaSpec::Golden, AlphaSpec::SqrtFrac { n: 2 }]]).unwrap();
    let sys = SystemDescriptor::TorusZd(act);
    let eps = Entourage::ball(0.1);
    let cert = covering_k(&sys, &eps, DEFAULT_K_MAX).unwrap();
    let (grid, _) = default_grid(&sys, &eps, 100).unwrap();
    let spot = spot_check(&sys, &cert, &grid, 200, 7).unwrap();
    assert_eq!(spot.failures, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constant_is_monotone_in_radius(r in 0.01f64..0.45, extra in 0.0f64..0.2) {
        let rot = RotationSystem::golden();
        let small = rotation_covering_k(&rot, r, DEFAULT_K_MAX).unwrap().k;
        let big = rotation_covering_k(&rot, r + extra, DEFAULT_K_MAX).unwrap().k;
        prop_assert!(small >= big);
    }

    #[test]
    fn rotation_certificates_are_sound(r in 0.02f64..0.3, seed in any::<u64>()) {
        let rot = RotationSystem::golden();
        let sys = SystemDescriptor::Rotation(rot.clone());
        let cert = rotation_covering_k(&rot, r, DEFAULT_K_MAX).unwrap();
        let (grid, _) = default_grid(&sys, &Entourage::ball(r), 50).unwrap();
        prop_assert_eq!(spot_check(&sys, &cert, &grid, 50, seed).unwrap().failures, 0);
    }

    #[test]
    fn sqrt_rotations_match_gap_scan(n in prop::sample::select(vec![2u64, 3, 5, 7, 10, 11]), r in 0.02f64..0.3) {
        let rot = RotationSystem::new("s", AlphaSpec::SqrtFrac { n }).unwrap();
        let alpha = (n as f64).sqrt().fract();
        prop_assert_eq!(rotation_covering_k(&rot, r, DEFAULT_K_MAX).unwrap().k, gap_scan_k(alpha, r));
    }
}
