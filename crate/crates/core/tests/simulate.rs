use mvlevy::conditions::{m_star, moment_bound, theta_member};
use mvlevy::drift_model::{lyapunov_params, DriftSpec};
use mvlevy::measures::{concentration, moment};
use mvlevy::simulate::*;
use mvlevy::{EmpiricalMeasure, Error, InitialState, LevyMeasureSpec, SimConfig};

fn ou(lambda: f64) -> DriftSpec {
    DriftSpec::MeanFieldOU { lambda }
}

fn brownian(scale: f64) -> LevyMeasureSpec {
    LevyMeasureSpec::stable(2.0, scale, 1).unwrap()
}

/// Two-sample Kolmogorov–Smirnov statistic.
fn ks(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n * m) as f64).sqrt()
}

#[test]
fn ou_frozen_at_zero() {
    let cfg = SimConfig::new(0.01, 200.0, 16, 1);
    let occ = frozen_trajectory(&ou(1.0), &EmpiricalMeasure::dirac(&[0.0]), &brownian(1.0), &InitialState::Point(vec![0.0]), &cfg).unwrap();
    let mean = occ.measure.mean()[0];
    assert!(mean.abs() < 3.0 * occ.standard_error(), "mean {mean} se {}", occ.standard_error());
    let var = occ.measure.variance_1d();
    assert!((var - 0.5).abs() < 0.05, "variance {var}");
    assert_eq!(occ.measure.len(), 16 * cfg.kept_per_chain());
    assert_eq!(cfg.kept_per_chain(), 1000);
    assert!(occ.measure.weights().iter().all(|w| (*w - occ.measure.weights()[0]).abs() < 1e-18));
}

#[test]
fn deterministic_contraction_collapses() {
    let cfg = SimConfig::new(0.01, 20.0, 4, 2);
    let occ =
        frozen_trajectory(&ou(1.0), &EmpiricalMeasure::dirac(&[0.0]), &brownian(1e-14), &InitialState::Point(vec![2.0]), &cfg).unwrap();
    let bound = 2.0 * (-(1.0 - cfg.burn_in_fraction) * cfg.horizon).exp();
    for (p, _) in occ.measure.iter() {
        assert!(p[0].abs() <= bound, "{} > {bound}", p[0]);
    }
}

#[test]
fn double_well_stays_in_well() {
    let spec = DriftSpec::DoubleWell1D { lambda: 1.0, a1: -1.0, a2: 1.0, kappa: 1.0 };
    let levy = LevyMeasureSpec::stable(1.8, 0.1, 1).unwrap();
    let cfg = SimConfig::new(0.01, 100.0, 8, 3);
    let occ = frozen_trajectory(&spec, &EmpiricalMeasure::dirac(&[-1.0]), &levy, &InitialState::Point(vec![-1.0]), &cfg).unwrap();
    let inside = 1.0 - concentration(&occ.measure, &[-1.0], 0.5);
    assert!(inside > 0.9, "mass {inside}");
}

#[test]
fn frozen_errors() {
    let cfg = SimConfig::new(0.01, 20.0, 2, 0);
    let d0 = EmpiricalMeasure::dirac(&[0.0]);
    let r = frozen_trajectory(&ou(1.0), &d0, &LevyMeasureSpec::stable(1.5, 1.0, 2).unwrap(), &InitialState::Point(vec![0.0]), &cfg);
    assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    let dw = DriftSpec::DoubleWell1D { lambda: 1.0, a1: -1.0, a2: 1.0, kappa: 1.0 };
    let r = frozen_trajectory(&dw, &d0, &LevyMeasureSpec::stable(0.9, 1.0, 1).unwrap(), &InitialState::Point(vec![0.0]), &cfg);
    assert!(matches!(r, Err(Error::Validation(_))));
    for bad in [
        SimConfig::new(0.02, 100.0, 1, 0),
        SimConfig::new(0.01, 5.0, 1, 0),
        SimConfig { burn_in_fraction: 1.0, ..cfg.clone() },
        SimConfig { thin: 0, ..cfg.clone() },
    ] {
        assert!(bad.validate().is_err());
    }
}

#[test]
fn heavy_tails_do_not_blow_up() {
    let spec = DriftSpec::DoubleWell1D { lambda: 1.0, a1: -1.0, a2: 1.0, kappa: 1.0 };
    let levy = LevyMeasureSpec::stable(1.1, 1.0, 1).unwrap();
    let cfg = SimConfig::new(0.01, 50.0, 8, 5);
    let occ = frozen_trajectory(&spec, &EmpiricalMeasure::dirac(&[0.0]), &levy, &InitialState::Point(vec![0.0]), &cfg).unwrap();
    assert!(occ.measure.flat_points().iter().all(|v| v.is_finite()));
}

#[test]
fn bit_identical_across_thread_counts() {
    let spec = DriftSpec::SymmetricTwoWell { lambda: 1.0, y1: vec![1.0, 0.0], y2: vec![-1.0, 0.0], kappa: 0.5 };
    let levy = LevyMeasureSpec::stable(1.6, 0.5, 2).unwrap();
    let cfg = SimConfig::new(0.01, 10.0, 6, 9);
    let frozen = EmpiricalMeasure::uniform(2, vec![1.0, 0.0, -1.0, 0.0]).unwrap();
    let init = InitialState::Measure(frozen.clone());
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| frozen_trajectory(&spec, &frozen, &levy, &init, &cfg).unwrap())
    };
    assert_eq!(run(1), run(3));
    let init_p = EmpiricalMeasure::uniform_1d(&(0..100).map(|i| i as f64 / 50.0 - 1.0).collect::<Vec<_>>()).unwrap();
    let pcfg = SimConfig::new(0.01, 10.0, 100, 9);
    let prun = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| particle_system(&ou(2.0), &brownian(1.0), &init_p, &pcfg, &[10.0]).unwrap())
    };
    assert_eq!(prun(1), prun(4));
}

#[test]
fn dt_refinement_moves_moments_within_noise() {
    let frozen = EmpiricalMeasure::dirac(&[0.0]);
    let run = |dt: f64| {
        let cfg = SimConfig { thin: (0.1 / dt).round() as usize, ..SimConfig::new(dt, 200.0, 16, 21) };
        frozen_trajectory(&ou(1.0), &frozen, &brownian(1.0), &InitialState::Point(vec![0.0]), &cfg).unwrap()
    };
    let (a, b) = (run(0.01), run(0.005));
    let se = (a.standard_error().powi(2) + b.standard_error().powi(2)).sqrt();
    assert!((a.measure.mean()[0] - b.measure.mean()[0]).abs() < 3.0 * se);
    let m2 = |o: &OccupationMeasure| moment(&o.measure, 2.0, None);
    // Second-moment standard error from per-chain second moments.
    let chain_se = |o: &OccupationMeasure| {
        let k = o.measure.len() / o.n_chains;
        let pts = o.measure.flat_points();
        let per: Vec<f64> = (0..o.n_chains).map(|c| pts[c * k..(c + 1) * k].iter().map(|v| v * v).sum::<f64>() / k as f64).collect();
        let m = per.iter().sum::<f64>() / per.len() as f64;
        (per.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (per.len() as f64 - 1.0) / per.len() as f64).sqrt()
    };
    let se2 = (chain_se(&a).powi(2) + chain_se(&b).powi(2)).sqrt();
    assert!((m2(&a) - m2(&b)).abs() < 3.0 * se2, "{} vs {} (se {se2})", m2(&a), m2(&b));
}

#[test]
fn occupation_moment_below_lyapunov_bound() {
    let spec = DriftSpec::DoubleWell1D { lambda: 1.0, a1: -1.0, a2: 1.0, kappa: 4.5 };
    let levy = LevyMeasureSpec::stable(1.8, 0.2, 1).unwrap();
    let p = lyapunov_params(&spec, 1.5).unwrap();
    let ms = m_star(&p, &levy).unwrap();
    let t = ms.chosen_eps;
    assert!(theta_member(&p, &levy, &t).unwrap());
    for x in [-1.0, 0.0, 1.0] {
        let frozen = EmpiricalMeasure::dirac(&[x]);
        let occ = frozen_trajectory(&spec, &frozen, &levy, &InitialState::Point(vec![x]), &SimConfig::new(0.01, 50.0, 8, 4)).unwrap();
        let bound = moment_bound(&p, &levy, &t, moment(&frozen, p.theta3, None)).unwrap();
        let got = moment(&occ.measure, p.beta_star, None);
        assert!(got <= 2.0 * bound, "{got} > 2 * {bound}");
    }
}

#[test]
fn particles_ou_contracting() {
    let init = EmpiricalMeasure::uniform_1d(&(0..1000).map(|i| 2.0 * (i as f64 / 999.0) - 1.0 + 0.5).collect::<Vec<_>>()).unwrap();
    let cfg = SimConfig::new(0.01, 10.0, 1000, 7);
    let snaps = particle_system(&ou(2.0), &brownian(1.0), &init, &cfg, &[0.0, 10.0]).unwrap();
    assert_eq!(snaps.len(), 2);
    let last = &snaps[1].measure;
    let var = last.variance_1d();
    // The empirical mean is an OU process with rate λ - 1 driven by noise of variance 1/N.
    let se = (1.0 / (2.0 * (2.0 - 1.0) * last.len() as f64)).sqrt();
    assert!(last.mean()[0].abs() < 3.0 * se, "mean {}", last.mean()[0]);
    assert!((var - 0.25).abs() < 0.025, "variance {var}");
}

#[test]
fn particles_ou_critical_keeps_mean() {
    // At λ = 1 the drift has zero average, so the empirical mean moves only by the
    // averaged noise: Var(mean_T - mean_0) = T/N.
    let n = 1000;
    let init = EmpiricalMeasure::uniform_1d(&(0..n).map(|i| 1.0 + (i as f64 / (n - 1) as f64) - 0.5).collect::<Vec<_>>()).unwrap();
    let t = 100.0;
    let cfg = SimConfig::new(0.01, t, n, 8);
    let snaps = particle_system(&ou(1.0), &brownian(1.0), &init, &cfg, &[t]).unwrap();
    let last = &snaps[0].measure;
    let se = (t / n as f64 + last.variance_1d() / n as f64).sqrt();
    assert!((last.mean()[0] - 1.0).abs() < 3.0 * se, "mean {} se {se}", last.mean()[0]);
}

#[test]
fn decoupled_particles_match_independent_chains() {
    let spec = DriftSpec::DoubleWell1D { lambda: 1.0, a1: -1.0, a2: 1.0, kappa: 0.0 };
    let levy = LevyMeasureSpec::stable(1.7, 0.5, 1).unwrap();
    let n = 400;
    let x0 = EmpiricalMeasure::dirac(&[0.3]);
    let cfg = SimConfig::new(0.01, 20.0, n, 13);
    let snaps = particle_system(&spec, &levy, &x0, &cfg, &[20.0]).unwrap();
    let p: Vec<f64> = snaps[0].measure.flat_points().to_vec();
    let fcfg = SimConfig { thin: 1000, seed: 99, ..cfg.clone() };
    assert_eq!(fcfg.kept_per_chain(), 1);
    let occ = frozen_trajectory(&spec, &x0, &levy, &InitialState::Point(vec![0.3]), &fcfg).unwrap();
    let f: Vec<f64> = occ.measure.flat_points().to_vec();
    assert!(ks(&p, &f) < ks_critical_1pct(n, n), "ks {}", ks(&p, &f));
}

#[test]
fn particle_errors_and_csv() {
    let init = EmpiricalMeasure::dirac(&[0.0]);
    let small = SimConfig::new(0.01, 10.0, 50, 0);
    assert!(matches!(particle_system(&ou(2.0), &brownian(1.0), &init, &small, &[1.0]), Err(Error::Validation(_))));
    let cfg = SimConfig::new(0.01, 10.0, 100, 0);
    assert!(particle_system(&ou(2.0), &brownian(1.0), &init, &cfg, &[11.0]).is_err());
    let snaps = particle_system(&ou(2.0), &brownian(1.0), &init, &cfg, &[0.0, 5.0]).unwrap();
    let csv = snapshots_to_csv(&snaps);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("chain_id,t,x_1"));
    assert_eq!(csv.lines().count(), 1 + 200);
    assert!(lines.next().unwrap().starts_with("0,0"));
}
