//! Iteration of the measure map `Λ_μ = π^μ` and the multiplicity search.

use crate::conditions;
use crate::drift_model::{default_beta, lyapunov_params, A1Params, DriftSpec};
use crate::error::{Error, Result};
use crate::levy_model::{norm, LevyMeasureSpec};
use crate::measures::{concentration, moment, w1, EmpiricalMeasure};
use crate::rng;
use crate::simulate::{frozen_trajectory, InitialState, OccupationMeasure, SimConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Settings of the Λ-iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointConfig {
    pub max_iter: usize,
    pub w1_tol: f64,
    pub sim: SimConfig,
    /// Relaxation weight on the previous iterate, in `[0, 1)`.
    #[serde(default)]
    pub damping: f64,
    /// Moment exponent reported as `moment_beta_star`; derived from the drift when absent.
    #[serde(default)]
    pub beta_star: Option<f64>,
}

impl FixedPointConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if self.max_iter == 0 {
            return Err(Error::Validation("max_iter must be positive".into()));
        }
        if !(self.w1_tol > 0.0) {
            return Err(Error::Validation(format!("w1_tol must be positive, got {}", self.w1_tol)));
        }
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::Validation(format!("damping must lie in [0, 1), got {}", self.damping)));
        }
        Ok(())
    }
}

/// Outcome of [`iterate_lambda`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointReport {
    pub converged: bool,
    pub iterations: usize,
    #[serde(skip)]
    pub final_measure: EmpiricalMeasure,
    /// `W₁(μ_{k+1}, μ_k)` per iteration.
    pub history: Vec<f64>,
    pub beta_star: f64,
    pub moment_beta_star: f64,
    /// W₁ between two independent occupation runs at the final measure.
    pub noise_floor: f64,
    /// W₁ between two independent occupation runs at the initial measure.
    pub preflight_noise_floor: f64,
    /// W₁ between one more Λ application and the final measure.
    pub residual: f64,
    pub damping_used: f64,
    pub final_mean: Vec<f64>,
    /// Standard error of the first coordinate of `final_mean`.
    pub final_mean_se: f64,
    pub final_variance: f64,
    pub n_points: usize,
    pub horizon: f64,
    pub dt: f64,
}

/// β* used for reporting moments of fixed points.
pub fn beta_star_for(drift: &DriftSpec, levy: &LevyMeasureSpec) -> f64 {
    let beta = default_beta(levy.alpha.min(2.0));
    lyapunov_params(drift, beta).map(|p| p.beta_star).unwrap_or(beta)
}

fn occupation(drift: &DriftSpec, levy: &LevyMeasureSpec, mu: &EmpiricalMeasure, sim: &SimConfig, seed: u64) -> Result<OccupationMeasure> {
    let cfg = SimConfig { seed, ..sim.clone() };
    frozen_trajectory(drift, mu, levy, &InitialState::Measure(mu.clone()), &cfg)
}

fn alternating(h: &[f64]) -> bool {
    if h.len() < 4 {
        return false;
    }
    let t = &h[h.len() - 4..];
    let d: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    d[0] * d[1] < 0.0 && d[1] * d[2] < 0.0 && t[3] > 0.5 * t[1]
}

/// Iterates `μ_{k+1} = (1-damping)·occupation(frozen at μ_k) + damping·μ_k`.
///
/// Stops when `W₁(μ_{k+1}, μ_k) ≤ w1_tol` or after `max_iter` steps. A preflight pair of
/// runs at `mu0` estimates the noise floor; a tolerance below it is rejected.
pub fn iterate_lambda(
    drift: &DriftSpec,
    levy: &LevyMeasureSpec,
    mu0: &EmpiricalMeasure,
    cfg: &FixedPointConfig,
) -> Result<FixedPointReport> {
    cfg.validate()?;
    if mu0.dim() != drift.dim() {
        return Err(Error::DimensionMismatch { expected: drift.dim(), found: mu0.dim() });
    }
    let base = cfg.sim.seed;
    let seed_k = |k: usize| rng::derive_seed(base, "lambda", k as u64);
    let n_target = cfg.sim.n_chains * cfg.sim.kept_per_chain();

    let first = occupation(drift, levy, mu0, &cfg.sim, seed_k(1))?;
    let check = occupation(drift, levy, mu0, &cfg.sim, rng::derive_seed(base, "preflight", 0))?;
    let preflight = w1(&first.measure, &check.measure)?;
    if cfg.w1_tol < preflight {
        return Err(Error::NoiseFloorExceedsTol { tol: cfg.w1_tol, floor: preflight });
    }

    let mut damping = cfg.damping;
    let mut mu = mu0.clone();
    let mut history = Vec::new();
    let mut converged = false;
    let mut pending = Some(first);
    let mut last_occ = None;
    for k in 1..=cfg.max_iter {
        let occ = match pending.take() {
            Some(o) => o,
            None => occupation(drift, levy, &mu, &cfg.sim, seed_k(k))?,
        };
        let next = if damping > 0.0 {
            let m = occ.measure.mixture(&mu, 1.0 - damping)?;
            if m.len() > 2 * n_target {
                m.resample(n_target, rng::derive_seed(base, "resample", k as u64))
            } else {
                m
            }
        } else {
            occ.measure.clone()
        };
        let step = w1(&next, &mu)?;
        history.push(step);
        mu = next;
        last_occ = Some(occ);
        log::debug!("lambda iteration {k}: w1 step {step:.4e}");
        if step <= cfg.w1_tol {
            converged = true;
            break;
        }
        if damping == 0.0 && alternating(&history) {
            log::info!("alternating W1 history; enabling damping 0.5");
            damping = 0.5;
        }
    }
    let a = occupation(drift, levy, &mu, &cfg.sim, rng::derive_seed(base, "floor", 1))?;
    let b = occupation(drift, levy, &mu, &cfg.sim, rng::derive_seed(base, "floor", 2))?;
    let noise_floor = w1(&a.measure, &b.measure)?;
    let residual = w1(&a.measure, &mu)?;
    let beta_star = cfg.beta_star.unwrap_or_else(|| beta_star_for(drift, levy));
    let last = last_occ.expect("at least one iteration");
    Ok(FixedPointReport {
        converged,
        iterations: history.len(),
        history,
        beta_star,
        moment_beta_star: moment(&mu, beta_star, None),
        noise_floor,
        preflight_noise_floor: preflight,
        residual,
        damping_used: damping,
        final_mean: mu.mean(),
        final_mean_se: last.standard_error(),
        final_variance: mu.variance_1d(),
        n_points: mu.len(),
        horizon: cfg.sim.horizon,
        dt: last.dt,
        final_measure: mu,
    })
}

/// Whether the fixed point's β*-moment respects the invariant-set bound `M*`
/// (with a factor 2 Monte Carlo slack, boundary inclusive).
pub fn invariance_check(report: &FixedPointReport, params: &A1Params, levy: &LevyMeasureSpec) -> Result<bool> {
    if !report.converged {
        return Err(Error::Validation("invariance_check needs a converged report".into()));
    }
    let ms = conditions::m_star(params, levy)?;
    Ok(moment(&report.final_measure, params.beta_star, None) <= 2.0 * ms.m_star)
}

/// Separation evidence for one pair of seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairEvidence {
    pub i: usize,
    pub j: usize,
    pub w1: f64,
    /// `μ_i(|· - y_i| ≥ |y_i - y_j|/2)`.
    pub concentration_i: f64,
    pub concentration_j: f64,
    pub w1_threshold: f64,
    /// `M_* < |y_i - y_j|/4`.
    pub m_star_ok: bool,
    pub distinct: bool,
}

/// Outcome of [`multiplicity_search`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiplicityReport {
    pub seeds: Vec<Vec<f64>>,
    pub fixed_points: Vec<Option<FixedPointReport>>,
    pub errors: Vec<Option<String>>,
    pub distinct_pairs: Vec<Vec<bool>>,
    pub separation_evidence: Vec<PairEvidence>,
    pub m_star: f64,
    /// `M_* < (1/4)·min_{i≠j}|y_i - y_j|`.
    pub hypothesis_ok: bool,
}

impl MultiplicityReport {
    /// Size of a greedily built set of pairwise distinct fixed points.
    pub fn distinct_count(&self) -> usize {
        let mut chosen: Vec<usize> = Vec::new();
        for i in 0..self.seeds.len() {
            if self.fixed_points[i].is_some() && chosen.iter().all(|&j| self.distinct_pairs[i][j]) {
                chosen.push(i);
            }
        }
        chosen.len()
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d)
}

/// Runs [`iterate_lambda`] from `δ_{y_i}` for every seed and tests pairwise separation.
///
/// Each run's random seed is derived from the seed point itself, so verdicts do not
/// depend on the order of `seeds`.
pub fn multiplicity_search(
    drift: &DriftSpec,
    levy: &LevyMeasureSpec,
    seeds: &[Vec<f64>],
    m_star: f64,
    cfg: &FixedPointConfig,
) -> Result<MultiplicityReport> {
    cfg.validate()?;
    if seeds.is_empty() {
        return Err(Error::Validation("at least one seed is required".into()));
    }
    for (i, a) in seeds.iter().enumerate() {
        if a.len() != drift.dim() {
            return Err(Error::DimensionMismatch { expected: drift.dim(), found: a.len() });
        }
        for b in &seeds[i + 1..] {
            if dist(a, b) == 0.0 {
                return Err(Error::Validation("seeds must be pairwise distinct".into()));
            }
        }
    }
    let mut min_d = f64::INFINITY;
    for i in 0..seeds.len() {
        for j in i + 1..seeds.len() {
            min_d = min_d.min(dist(&seeds[i], &seeds[j]));
        }
    }
    let hypothesis_ok = m_star < min_d / 4.0;
    if !hypothesis_ok {
        log::warn!("M_* = {m_star} is not below min|y_i - y_j|/4 = {}", min_d / 4.0);
    }
    let runs: Vec<Result<FixedPointReport>> = seeds
        .par_iter()
        .map(|y| {
            let mut c = cfg.clone();
            c.sim.seed = rng::seed_from_point(cfg.sim.seed, y);
            iterate_lambda(drift, levy, &EmpiricalMeasure::dirac(y), &c)
        })
        .collect();
    let n = seeds.len();
    let mut fixed_points = Vec::with_capacity(n);
    let mut errors = Vec::with_capacity(n);
    for r in runs {
        match r {
            Ok(rep) => {
                fixed_points.push(Some(rep));
                errors.push(None);
            }
            Err(e) => {
                fixed_points.push(None);
                errors.push(Some(e.to_string()));
            }
        }
    }
    let mut distinct_pairs = vec![vec![false; n]; n];
    let mut evidence = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (Some(fi), Some(fj)) = (&fixed_points[i], &fixed_points[j]) else { continue };
            let r = dist(&seeds[i], &seeds[j]) / 2.0;
            let ci = concentration(&fi.final_measure, &seeds[i], r);
            let cj = concentration(&fj.final_measure, &seeds[j], r);
            let w = w1(&fi.final_measure, &fj.final_measure)?;
            let thr = (2.0 * fi.noise_floor.max(fj.noise_floor)).max(cfg.w1_tol);
            let distinct = ci < 0.5 && cj < 0.5 && w > thr;
            distinct_pairs[i][j] = distinct;
            distinct_pairs[j][i] = distinct;
            evidence.push(PairEvidence {
                i,
                j,
                w1: w,
                concentration_i: ci,
                concentration_j: cj,
                w1_threshold: thr,
                m_star_ok: m_star < r / 2.0,
                distinct,
            });
        }
    }
    Ok(MultiplicityReport {
        seeds: seeds.to_vec(),
        fixed_points,
        errors,
        distinct_pairs,
        separation_evidence: evidence,
        m_star,
        hypothesis_ok,
    })
}
