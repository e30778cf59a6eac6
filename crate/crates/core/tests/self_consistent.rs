use approx::assert_relative_eq;
use mvlevy::self_consistent::*;
use mvlevy::Error;
use proptest::prelude::*;

/// Riemann sum of `(x - m) e^{γmx - x⁴ + βx²}` on a uniform grid over `[-L, L]`.
fn h_riemann(gamma: f64, beta: f64, m: f64, half_width: f64, n: usize) -> f64 {
    let dx = 2.0 * half_width / n as f64;
    (0..=n)
        .map(|i| {
            let x = -half_width + dx * i as f64;
            (x - m) * (gamma * m * x - x.powi(4) + beta * x * x).exp()
        })
        .sum::<f64>()
        * dx
}

/// Mean minus `m` of the tilted density, by Riemann sums.
fn h_tilde_riemann(gamma: f64, beta: f64, m: f64) -> f64 {
    let n = 200_000;
    let l = 8.0;
    let dx = 2.0 * l / n as f64;
    let emax = (0..=n).map(|i| -l + dx * i as f64).map(|x| gamma * m * x - x.powi(4) + beta * x * x).fold(f64::NEG_INFINITY, f64::max);
    let (mut i0, mut i1) = (0.0, 0.0);
    for i in 0..=n {
        let x = -l + dx * i as f64;
        let w = (gamma * m * x - x.powi(4) + beta * x * x - emax).exp();
        i0 += w;
        i1 += x * w;
    }
    i1 / i0 - m
}

#[test]
fn h_vanishes_at_zero() {
    for (g, b) in [(1.0, 0.5), (2.0, 1.0), (2.0, 3.0), (4.0, 2.0)] {
        let c = GradientCase::new(g, b).unwrap();
        assert!(h_fn(&c, 0.0).unwrap().abs() < 1e-10);
        assert!(h_tilde(&c, 0.0).unwrap().abs() < 1e-10);
    }
}

#[test]
fn h_is_odd() {
    for (g, b) in [(2.0, 1.0), (2.0, 3.0), (1.0, 2.0)] {
        let c = GradientCase::new(g, b).unwrap();
        for i in 1..=60 {
            let m = 0.05 * i as f64;
            let (p, q) = (h_fn(&c, m).unwrap(), h_fn(&c, -m).unwrap());
            assert!((p + q).abs() < 1e-8, "h({m}) = {p}, h(-{m}) = {q}");
        }
    }
}

#[test]
fn h_matches_riemann_oracle() {
    for (g, b, m) in [(2.0, 1.0, 0.3), (2.0, 3.0, -0.7), (1.0, 0.5, 1.2), (4.0, 1.0, 0.9), (4.0, 2.0, -3.0), (2.0, 1.0, -2.4)] {
        let c = GradientCase::new(g, b).unwrap();
        assert_relative_eq!(h_fn(&c, m).unwrap(), h_riemann(g, b, m, 8.0, 400_000), max_relative = 1e-7);
        assert_relative_eq!(h_tilde(&c, m).unwrap(), h_tilde_riemann(g, b, m), max_relative = 1e-7, epsilon = 1e-10);
    }
}

#[test]
fn h_sign_at_large_m() {
    // For m = 10 the tilted density concentrates near the root of 4x³ - 2x = 20m,
    // about 3.7, so the mean falls short of m and h is negative.
    let c = GradientCase::new(2.0, 1.0).unwrap();
    let lib = h_fn(&c, 10.0).unwrap();
    let oracle = h_riemann(2.0, 1.0, 10.0, 8.0, 800_000);
    assert!(lib < 0.0 && oracle < 0.0);
    assert_relative_eq!(lib, oracle, max_relative = 1e-6);
}

#[test]
fn slope_matches_finite_difference() {
    let c = GradientCase::new(2.0, 1.0).unwrap();
    let d = 1e-4;
    let fd = (h_tilde(&c, d).unwrap() - h_tilde(&c, -d).unwrap()) / (2.0 * d);
    assert_relative_eq!(slope_at_zero(&c).unwrap(), fd, max_relative = 1e-6);
}

#[test]
fn root_sets() {
    let small = root_count(&GradientCase::new(1.0, 1.0).unwrap(), 3.0, 1000).unwrap();
    assert_eq!(small.count, 1);
    assert_eq!(small.roots, vec![0.0]);
    let c = GradientCase::new(2.0, 3.0).unwrap();
    let rs = root_count(&c, default_m_max(&c), 1000).unwrap();
    assert_eq!(rs.count, 3);
    assert_eq!(rs.roots[0], -rs.roots[2]);
    for r in &rs.roots {
        assert!(h_tilde(&c, *r).unwrap().abs() < 1e-6);
    }
    assert!(matches!(root_count(&c, 3.0, 999), Err(Error::Validation(_))));
}

#[test]
fn computed_counts() {
    assert_eq!(count_at(2.0, 3.0).unwrap(), 3);
    assert_eq!(count_at(2.0, 1.0).unwrap(), 3);
    for b in [0.5, 1.0, 2.0] {
        assert_eq!(count_at(4.0, b).unwrap(), 3);
    }
    assert_eq!(count_at(1.0, 2.0).unwrap(), 1);
    assert_eq!(count_at(1.0, 3.0).unwrap(), 3);
}

#[test]
fn transition_matches_unit_slope() {
    // The count leaves 1 where h̃'(0) = γ Var₀ - 1 changes sign.
    for g in [1.0, 2.0] {
        let bc = beta_c(g, 1e-3).unwrap();
        assert_eq!(bc.flag, BetaCFlag::Transition);
        assert_eq!(bc.formula_value, beta_c_formula(g));
        let below = slope_at_zero(&GradientCase::new(g, bc.beta_c - 0.01).unwrap()).unwrap();
        let above = slope_at_zero(&GradientCase::new(g, bc.beta_c + 0.01).unwrap()).unwrap();
        assert!(below < 0.0 && above > 0.0, "gamma {g}: {below} {above}");
    }
    assert_eq!(beta_c(4.0, 0.05).unwrap().flag, BetaCFlag::MultistableAtFloor);
    assert_eq!(beta_c(4.0, 0.05).unwrap().beta_c, 0.0);
    assert_relative_eq!(beta_c_formula(2.0), 2.0);
    assert_relative_eq!(beta_c_formula(3.0), 0.5);
}

#[test]
fn ou_classes() {
    let two = ou_classify(2.0).unwrap();
    assert_eq!((two.kind, two.variance), (OuKind::Unique, 0.25));
    assert_eq!(ou_classify(1.0).unwrap().kind, OuKind::Continuum);
    assert_eq!(ou_classify(0.5).unwrap().kind, OuKind::Unique);
    assert!(ou_classify(0.0).is_err());
}

#[test]
fn density_properties() {
    let c = GradientCase::new(2.0, 2.0).unwrap();
    let n = 20_000;
    let grid: Vec<f64> = (0..=n).map(|i| -4.0 + 8.0 * i as f64 / n as f64).collect();
    let dens = stationary_density(&c, 0.0, &grid).unwrap();
    let dx = 8.0 / n as f64;
    let trap = dx * (dens.iter().sum::<f64>() - 0.5 * (dens[0] + dens[n]));
    assert!((trap - 1.0).abs() < 1e-6, "{trap}");
    for i in 0..=n / 2 {
        assert_relative_eq!(dens[i], dens[n - i], max_relative = 1e-12);
    }
    let c3 = GradientCase::new(2.0, 3.0).unwrap();
    let root = root_count(&c3, default_m_max(&c3), 1000).unwrap().roots[2];
    let d3 = stationary_density(&c3, root, &grid).unwrap();
    let mean = dx * grid.iter().zip(&d3).map(|(x, p)| x * p).sum::<f64>();
    assert!((mean - root).abs() < 1e-6, "{mean} vs {root}");
    assert!(stationary_density(&c, 0.0, &[-1.0, 1.0]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn roots_symmetric_and_odd(g in 0.5f64..4.0, b in 0.1f64..3.0) {
        let c = GradientCase::new(g, b).unwrap();
        match root_count(&c, default_m_max(&c), 1000) {
            Ok(rs) => {
                prop_assert_eq!(rs.count % 2, 1);
                for (x, y) in rs.roots.iter().zip(rs.roots.iter().rev()) {
                    prop_assert_eq!(*x, -*y);
                }
            }
            Err(Error::GridTooCoarse { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn count_nondecreasing_in_beta(g in 0.5f64..3.4) {
        let mut prev = 1;
        for i in 0..12 {
            let b = 0.25 + 0.25 * i as f64;
            let n = count_at(g, b).unwrap();
            prop_assert!(n >= prev, "gamma {} beta {}: {} after {}", g, b, n, prev);
            prev = n;
        }
    }
}
