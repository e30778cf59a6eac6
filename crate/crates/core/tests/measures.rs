mod common;

use approx::assert_relative_eq;
use common::*;
use mvlevy::measures::*;
use mvlevy::{EmpiricalMeasure, Error};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn moment_examples() {
    assert_eq!(moment(&EmpiricalMeasure::dirac(&[0.0, 0.0]), 1.7, None), 0.0);
    assert_relative_eq!(moment(&EmpiricalMeasure::dirac(&[3.0, 4.0]), 2.0, None), 25.0, max_relative = 1e-14);
    let m = EmpiricalMeasure::uniform_1d(&[-1.0, 0.0, 3.0]).unwrap();
    assert_relative_eq!(moment(&m, 1.0, None), 4.0 / 3.0, max_relative = 1e-14);
    assert_relative_eq!(moment(&m, 1.0, Some(&[3.0])), 7.0 / 3.0, max_relative = 1e-14);
}

#[test]
fn w1_examples() {
    let m = EmpiricalMeasure::uniform_1d(&[0.3, -2.0, 5.0]).unwrap();
    assert_eq!(w1(&m, &m).unwrap(), 0.0);
    let a = EmpiricalMeasure::dirac(&[1.5]);
    let b = EmpiricalMeasure::dirac(&[-0.25]);
    assert_relative_eq!(w1(&a, &b).unwrap(), 1.75, max_relative = 1e-15);
    let c = EmpiricalMeasure::dirac(&[1.0, 2.0]);
    assert!(matches!(w1(&a, &c), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn w1_matches_exhaustive_assignment() {
    let mut r = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..200 {
        let n = r.gen_range(1..=6);
        let x: Vec<f64> = (0..n).map(|_| r.gen_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| r.gen_range(-5.0..5.0)).collect();
        let got = w1(&EmpiricalMeasure::uniform_1d(&x).unwrap(), &EmpiricalMeasure::uniform_1d(&y).unwrap()).unwrap();
        assert!((got - assignment_w1(&x, &y)).abs() < 1e-12);
    }
}

#[test]
fn sliced_w1_of_diracs_in_two_dimensions() {
    // Averaged over directions, |⟨θ, x - y⟩| has mean 2|x - y|/π in the plane.
    let a = EmpiricalMeasure::dirac(&[0.0, 0.0]);
    let b = EmpiricalMeasure::dirac(&[3.0, 4.0]);
    let v = w1_with(&a, &b, SlicedOptions { projections: 20_000, seed: 1 }).unwrap();
    assert_relative_eq!(v, 10.0 / std::f64::consts::PI, max_relative = 0.02);
}

#[test]
fn weighted_tv_examples() {
    let m = EmpiricalMeasure::uniform_1d(&[0.0, 1.0, 2.5]).unwrap();
    assert_eq!(weighted_tv(&m, &m, 1.0).unwrap(), 0.0);
    let a = EmpiricalMeasure::dirac(&[2.0]);
    let b = EmpiricalMeasure::dirac(&[-1.0]);
    assert_relative_eq!(weighted_tv(&a, &b, 1.5).unwrap(), u(&[2.0], 1.5) + u(&[-1.0], 1.5), max_relative = 1e-14);
    let xs = [-1.0, 0.5, 3.0];
    let w = vec![0.2, 0.5, 0.3];
    let v = vec![0.6, 0.1, 0.3];
    let p = EmpiricalMeasure::from_flat(1, xs.to_vec(), w.clone()).unwrap();
    let q = EmpiricalMeasure::from_flat(1, xs.to_vec(), v.clone()).unwrap();
    let direct: f64 = (0..3).map(|i| (w[i] - v[i]).abs() * u(&[xs[i]], 2.0)).sum();
    assert_eq!(weighted_tv(&p, &q, 2.0).unwrap(), direct);
}

#[test]
fn weighted_tv_binned_dominates_plain_tv() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<f64> = (0..2000).map(|_| r.gen_range(-2.0..2.0)).collect();
    let y: Vec<f64> = (0..2000).map(|_| r.gen_range(-1.0..3.0)).collect();
    let a = EmpiricalMeasure::uniform_1d(&x).unwrap();
    let b = EmpiricalMeasure::uniform_1d(&y).unwrap();
    let weighted = weighted_tv(&a, &b, 1.0).unwrap();
    let plain = weighted_tv(&a, &b, 1e-12).unwrap();
    assert!(weighted >= plain && plain > 0.0);
    let four = EmpiricalMeasure::uniform(4, (0..4000).map(|i| i as f64).collect()).unwrap();
    assert!(weighted_tv(&four, &four, 1.0).is_err());
}

#[test]
fn concentration_examples() {
    assert_eq!(concentration(&EmpiricalMeasure::dirac(&[1.0, 2.0]), &[1.0, 2.0], 0.1), 0.0);
    let circle: Vec<f64> = (0..8)
        .flat_map(|k| {
            let t = k as f64 * std::f64::consts::PI / 4.0;
            [1.0 + t.cos(), t.sin()]
        })
        .collect();
    let m = EmpiricalMeasure::uniform(2, circle).unwrap();
    assert_eq!(concentration(&m, &[1.0, 0.0], 2.0), 0.0);
    assert_eq!(concentration(&m, &[1.0, 0.0], 0.5), 1.0);
    let two = EmpiricalMeasure::uniform(2, vec![0.0, 0.0, 2.0, 0.0]).unwrap();
    assert_eq!(concentration(&two, &[0.0, 0.0], 1.0), 0.5);
}

#[test]
fn csv_round_trip_is_exact() {
    let m = EmpiricalMeasure::from_flat(2, vec![0.1, -1.0 / 3.0, 1e-300, 7.0], vec![0.3, 0.7]).unwrap();
    let back = EmpiricalMeasure::from_csv_str(&m.to_csv_string()).unwrap();
    assert_eq!(back, m);
}

#[test]
fn weights_are_normalized_and_validated() {
    let m = EmpiricalMeasure::from_flat(1, vec![0.0, 1.0], vec![2.0, 6.0]).unwrap();
    assert_eq!(m.weights(), &[0.25, 0.75]);
    assert!(EmpiricalMeasure::from_flat(1, vec![f64::NAN], vec![1.0]).is_err());
    assert!(matches!(EmpiricalMeasure::from_flat(1, vec![], vec![]), Err(Error::EmptyMeasure)));
}

fn sample(r: &mut ChaCha8Rng) -> EmpiricalMeasure {
    let n = r.gen_range(1..=12);
    let x: Vec<f64> = (0..n).map(|_| r.gen_range(-10.0..10.0)).collect();
    let w: Vec<f64> = (0..n).map(|_| r.gen_range(0.01..1.0)).collect();
    EmpiricalMeasure::from_flat(1, x, w).unwrap()
}

#[test]
fn metric_axioms_on_random_triples() {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let (a, b, c) = (sample(&mut r), sample(&mut r), sample(&mut r));
        let ab = w1(&a, &b).unwrap();
        let ba = w1(&b, &a).unwrap();
        let bc = w1(&b, &c).unwrap();
        let ac = w1(&a, &c).unwrap();
        assert!(ab >= 0.0);
        assert!((ab - ba).abs() < 1e-10);
        assert!(ac <= ab + bc + 1e-10);
    }
}

proptest! {
    #[test]
    fn moment_monotone_in_p_outside_unit_ball(xs in prop::collection::vec(1.0f64..20.0, 1..20), p in 0.1f64..3.0, dp in 0.0f64..2.0) {
        let m = EmpiricalMeasure::uniform_1d(&xs).unwrap();
        prop_assert!(moment(&m, p, None) <= moment(&m, p + dp, None) * (1.0 + 1e-12));
    }

    #[test]
    fn concentration_non_increasing(xs in prop::collection::vec(-5.0f64..5.0, 1..30), r in 0.01f64..5.0, dr in 0.0f64..5.0) {
        let m = EmpiricalMeasure::uniform_1d(&xs).unwrap();
        prop_assert!(concentration(&m, &[0.0], r + dr) <= concentration(&m, &[0.0], r));
    }

    #[test]
    fn translation_shifts_w1(xs in prop::collection::vec(-5.0f64..5.0, 1..30), c in -5.0f64..5.0) {
        let m = EmpiricalMeasure::uniform_1d(&xs).unwrap();
        prop_assert!((w1(&m, &m.shifted(&[c])).unwrap() - c.abs()).abs() < 1e-10);
    }

    #[test]
    fn resampling_preserves_support(xs in prop::collection::vec(-5.0f64..5.0, 1..30), n in 1usize..200, seed in any::<u64>()) {
        let m = EmpiricalMeasure::uniform_1d(&xs).unwrap();
        let s = m.resample(n, seed);
        prop_assert_eq!(s.len(), n);
        prop_assert!(s.flat_points().iter().all(|v| xs.contains(v)));
    }
}
