//! Euler schemes for the frozen-measure SDE and the interacting particle system.
//!
//! Each step applies the drift over `dt` in substeps `h = min(remaining, 0.25(1+|y|)/|b(y)|)`
//! and then adds one exact noise increment. Away from stiff excursions the substep is the
//! whole `dt`, i.e. plain explicit Euler.

use crate::drift_model::{DriftSpec, MeasureSummary};
use crate::error::{Error, Result};
use crate::levy_model::{IncrementSampler, LevyMeasureSpec};
use crate::measures::{fmt17, EmpiricalMeasure};
use crate::rng::{self, Stream};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Threshold on `|Y|` that aborts a run.
pub const BLOWUP_LIMIT: f64 = 1e8;
const MAX_SUBSTEPS: u32 = 100_000;

fn default_burn_in() -> f64 {
    0.5
}
fn default_thin() -> usize {
    10
}

/// Discretization and sampling settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "default_burn_in")]
    pub burn_in_fraction: f64,
    #[serde(default = "default_thin")]
    pub thin: usize,
    /// Number of independent chains (or particles).
    pub n_chains: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(dt: f64, horizon: f64, n_chains: usize, seed: u64) -> Self {
        Self { dt, horizon, burn_in_fraction: 0.5, thin: 10, n_chains, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if !(self.dt > 0.0 && self.dt <= 0.01) {
            return bad(format!("dt must lie in (0, 0.01], got {}", self.dt));
        }
        if !(self.horizon > 0.0) || self.horizon / self.dt < 1e3 * (1.0 - 1e-12) {
            return bad(format!("T/dt must be at least 1e3 (T = {}, dt = {})", self.horizon, self.dt));
        }
        if !(0.0..1.0).contains(&self.burn_in_fraction) {
            return bad(format!("burn_in_fraction must lie in [0, 1), got {}", self.burn_in_fraction));
        }
        if self.thin == 0 || self.n_chains == 0 {
            return bad("thin and n_chains must be positive".into());
        }
        Ok(())
    }

    /// Total number of Euler steps.
    pub fn steps(&self) -> u64 {
        (self.horizon / self.dt).round() as u64
    }

    /// Recorded states per chain: `floor((1 - burn_in)·T/(dt·thin))`.
    pub fn kept_per_chain(&self) -> usize {
        ((1.0 - self.burn_in_fraction) * self.steps() as f64 / self.thin as f64 + 1e-9).floor() as usize
    }
}

/// Starting state of every chain.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    Point(Vec<f64>),
    /// Each chain draws its start from this measure.
    Measure(EmpiricalMeasure),
}

impl InitialState {
    fn dim(&self) -> usize {
        match self {
            InitialState::Point(x) => x.len(),
            InitialState::Measure(m) => m.dim(),
        }
    }

    fn draw(&self, r: &mut Stream) -> Vec<f64> {
        match self {
            InitialState::Point(x) => x.clone(),
            InitialState::Measure(m) => draw_atom(m, r).to_vec(),
        }
    }
}

fn draw_atom<'a>(m: &'a EmpiricalMeasure, r: &mut Stream) -> &'a [f64] {
    if m.len() == 1 {
        return m.point(0);
    }
    let u: f64 = r.gen();
    let mut acc = 0.0;
    for i in 0..m.len() {
        acc += m.weight(i);
        if u < acc {
            return m.point(i);
        }
    }
    m.point(m.len() - 1)
}

/// Time-averaged occupation measure over all chains after burn-in.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationMeasure {
    pub measure: EmpiricalMeasure,
    pub horizon: f64,
    /// Step size actually used (halved once after a blow-up).
    pub dt: f64,
    pub n_chains: usize,
    /// Per-chain time averages.
    pub chain_means: Vec<Vec<f64>>,
    /// Effective sample size of the first coordinate.
    pub ess: f64,
}

impl OccupationMeasure {
    /// Standard error of the first-coordinate mean estimated from chain means
    /// (or from 10 batch means when there is a single chain).
    pub fn standard_error(&self) -> f64 {
        if self.chain_means.len() >= 2 {
            let m: Vec<f64> = self.chain_means.iter().map(|c| c[0]).collect();
            se_of_means(&m)
        } else {
            let xs: Vec<f64> = self.measure.flat_points().iter().step_by(self.measure.dim()).copied().collect();
            let b = 10.min(xs.len());
            let len = xs.len() / b;
            let bm: Vec<f64> = (0..b).map(|k| xs[k * len..(k + 1) * len].iter().sum::<f64>() / len as f64).collect();
            se_of_means(&bm)
        }
    }
}

fn se_of_means(m: &[f64]) -> f64 {
    let n = m.len() as f64;
    let mean = m.iter().sum::<f64>() / n;
    let var = m.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (var / n).sqrt()
}

/// Advances `y` by one step of length `dt`.
#[allow(clippy::too_many_arguments)]
#[inline]
fn advance(
    drift: &DriftSpec,
    s: &MeasureSummary,
    sampler: &IncrementSampler,
    dt: f64,
    y: &mut [f64],
    b: &mut [f64],
    inc: &mut [f64],
    r: &mut Stream,
) -> bool {
    let mut rem = dt;
    let mut sub = 0;
    while rem > 0.0 {
        drift.eval_with(y, s, b);
        let bn = b.iter().map(|v| v * v).sum::<f64>().sqrt();
        let yn = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let cap = 0.25 * (1.0 + yn);
        let h = if bn * rem <= cap { rem } else { cap / bn };
        for (yi, bi) in y.iter_mut().zip(b.iter()) {
            *yi += h * bi;
        }
        rem -= h;
        sub += 1;
        if sub > MAX_SUBSTEPS || !h.is_finite() {
            return false;
        }
        if rem < 1e-15 * dt {
            break;
        }
    }
    sampler.sample_into(r, inc);
    let mut n2 = 0.0;
    for (yi, ii) in y.iter_mut().zip(inc.iter()) {
        *yi += ii;
        n2 += *yi * *yi;
    }
    n2.is_finite() && n2 <= BLOWUP_LIMIT * BLOWUP_LIMIT
}

/// Scalar version of [`advance`].
#[inline]
fn advance_scalar(drift: &DriftSpec, s: &MeasureSummary, sampler: &IncrementSampler, dt: f64, y: &mut f64, r: &mut Stream) -> bool {
    let mut rem = dt;
    let mut sub = 0;
    while rem > 0.0 {
        let b = drift.eval_scalar(*y, s);
        let cap = 0.25 * (1.0 + y.abs());
        let h = if b.abs() * rem <= cap { rem } else { cap / b.abs() };
        *y += h * b;
        rem -= h;
        sub += 1;
        if sub > MAX_SUBSTEPS || !h.is_finite() {
            return false;
        }
        if rem < 1e-15 * dt {
            break;
        }
    }
    *y += sampler.sample_scalar(r);
    y.is_finite() && y.abs() <= BLOWUP_LIMIT
}

fn run_frozen(
    drift: &DriftSpec,
    s: &MeasureSummary,
    levy: &LevyMeasureSpec,
    init: &InitialState,
    cfg: &SimConfig,
    refine: u64,
) -> Result<OccupationMeasure> {
    let d = drift.dim();
    let dt = cfg.dt / refine as f64;
    let sampler = IncrementSampler::new(levy, dt)?;
    let steps = cfg.steps() * refine;
    let kept = cfg.kept_per_chain();
    let stride = cfg.thin as u64 * refine;
    let first_kept = steps - kept as u64 * stride;
    let chains: Vec<Result<Vec<f64>>> = (0..cfg.n_chains)
        .into_par_iter()
        .map(|c| {
            let mut r = rng::stream(cfg.seed, c as u64);
            let mut y = init.draw(&mut r);
            let mut b = vec![0.0; d];
            let mut inc = vec![0.0; d];
            let mut out = Vec::with_capacity(kept * d);
            if d == 1 {
                let mut v = y[0];
                let mut countdown = first_kept + stride;
                for step in 1..=steps {
                    if !advance_scalar(drift, s, &sampler, dt, &mut v, &mut r) {
                        return Err(Error::Blowup { step, chain: c });
                    }
                    countdown -= 1;
                    if countdown == 0 {
                        out.push(v);
                        countdown = stride;
                    }
                }
                return Ok(out);
            }
            let mut countdown = first_kept + stride;
            for step in 1..=steps {
                if !advance(drift, s, &sampler, dt, &mut y, &mut b, &mut inc, &mut r) {
                    return Err(Error::Blowup { step, chain: c });
                }
                countdown -= 1;
                if countdown == 0 {
                    out.extend_from_slice(&y);
                    countdown = stride;
                }
            }
            Ok(out)
        })
        .collect();
    let mut flat = Vec::with_capacity(cfg.n_chains * kept * d);
    let mut chain_means = Vec::with_capacity(cfg.n_chains);
    for ch in chains {
        let ch = ch?;
        let mut m = vec![0.0; d];
        for row in ch.chunks(d) {
            for (mi, v) in m.iter_mut().zip(row) {
                *mi += v;
            }
        }
        m.iter_mut().for_each(|v| *v /= kept as f64);
        chain_means.push(m);
        flat.extend(ch);
    }
    let measure = EmpiricalMeasure::uniform(d, flat)?;
    let ess = effective_sample_size(&measure, &chain_means, kept);
    Ok(OccupationMeasure { measure, horizon: cfg.horizon, dt, n_chains: cfg.n_chains, chain_means, ess })
}

fn effective_sample_size(m: &EmpiricalMeasure, chain_means: &[Vec<f64>], kept: usize) -> f64 {
    let n = m.len() as f64;
    let var = m.variance_1d();
    if chain_means.len() < 2 || var == 0.0 {
        return n;
    }
    let cm: Vec<f64> = chain_means.iter().map(|c| c[0]).collect();
    let mean = cm.iter().sum::<f64>() / cm.len() as f64;
    let vm = cm.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (cm.len() as f64 - 1.0);
    if vm == 0.0 {
        return n;
    }
    (chain_means.len() as f64 * var / vm).min(n).max(1.0).min(n.max(kept as f64))
}

fn check_noise(drift: &DriftSpec, levy: &LevyMeasureSpec) -> Result<()> {
    levy.validate()?;
    drift.validate()?;
    if levy.dim != drift.dim() {
        return Err(Error::DimensionMismatch { expected: drift.dim(), found: levy.dim });
    }
    let cubic = !matches!(drift, DriftSpec::MeanFieldOU { .. });
    if cubic && matches!(levy.kind, crate::levy_model::LevyKind::Stable) && levy.alpha <= 1.0 {
        return Err(Error::Validation(format!("cubic drifts need alpha in (1, 2], got {}", levy.alpha)));
    }
    Ok(())
}

/// Simulates the SDE with drift `b(·, frozen)` and returns its occupation measure.
pub fn frozen_trajectory(
    drift: &DriftSpec,
    frozen: &EmpiricalMeasure,
    levy: &LevyMeasureSpec,
    init: &InitialState,
    cfg: &SimConfig,
) -> Result<OccupationMeasure> {
    cfg.validate()?;
    check_noise(drift, levy)?;
    if init.dim() != drift.dim() {
        return Err(Error::DimensionMismatch { expected: drift.dim(), found: init.dim() });
    }
    let s = drift.summarize(frozen)?;
    match run_frozen(drift, &s, levy, init, cfg, 1) {
        Err(Error::Blowup { step, chain }) => {
            log::warn!("blow-up at step {step} of chain {chain}; retrying with dt/2");
            run_frozen(drift, &s, levy, init, cfg, 2)
        }
        other => other,
    }
}

/// Particle cloud at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub measure: EmpiricalMeasure,
}

fn run_particles(
    drift: &DriftSpec,
    levy: &LevyMeasureSpec,
    init: &EmpiricalMeasure,
    cfg: &SimConfig,
    times: &[f64],
    refine: u64,
) -> Result<Vec<Snapshot>> {
    let d = drift.dim();
    let n = cfg.n_chains;
    let dt = cfg.dt / refine as f64;
    let sampler = IncrementSampler::new(levy, dt)?;
    let steps = cfg.steps() * refine;
    let mut streams: Vec<Stream> = (0..n).map(|i| rng::stream(cfg.seed, i as u64)).collect();
    let mut pos: Vec<f64> = if init.len() == n {
        init.flat_points().to_vec()
    } else {
        let mut v = Vec::with_capacity(n * d);
        for r in streams.iter_mut() {
            v.extend_from_slice(draw_atom(init, r));
        }
        v
    };
    let snap_steps: Vec<u64> = times.iter().map(|t| ((t / dt).round() as u64).min(steps)).collect();
    let mut out: Vec<Option<Snapshot>> = vec![None; times.len()];
    let take = |step: u64, pos: &[f64], out: &mut Vec<Option<Snapshot>>| -> Result<()> {
        for (k, s) in snap_steps.iter().enumerate() {
            if *s == step {
                out[k] = Some(Snapshot { t: step as f64 * dt, measure: EmpiricalMeasure::uniform(d, pos.to_vec())? });
            }
        }
        Ok(())
    };
    take(0, &pos, &mut out)?;
    for step in 1..=steps {
        let s = drift.summarize_flat(&pos);
        let bad = pos
            .par_chunks_mut(d)
            .zip(streams.par_iter_mut())
            .enumerate()
            .map(|(i, (y, r))| {
                let mut b = vec![0.0; d];
                let mut inc = vec![0.0; d];
                if advance(drift, &s, &sampler, dt, y, &mut b, &mut inc, r) {
                    usize::MAX
                } else {
                    i
                }
            })
            .min()
            .unwrap_or(usize::MAX);
        if bad != usize::MAX {
            return Err(Error::Blowup { step, chain: bad });
        }
        take(step, &pos, &mut out)?;
    }
    Ok(out.into_iter().flatten().collect())
}

/// Coupled particle approximation: each particle's drift uses the current empirical law.
pub fn particle_system(
    drift: &DriftSpec,
    levy: &LevyMeasureSpec,
    init: &EmpiricalMeasure,
    cfg: &SimConfig,
    snapshot_times: &[f64],
) -> Result<Vec<Snapshot>> {
    cfg.validate()?;
    check_noise(drift, levy)?;
    if cfg.n_chains < 100 {
        return Err(Error::Validation(format!("particle_system needs at least 100 particles, got {}", cfg.n_chains)));
    }
    if init.dim() != drift.dim() {
        return Err(Error::DimensionMismatch { expected: drift.dim(), found: init.dim() });
    }
    if snapshot_times.iter().any(|t| !(*t >= 0.0) || *t > cfg.horizon * (1.0 + 1e-12)) {
        return Err(Error::Validation("snapshot times must lie in [0, T]".into()));
    }
    match run_particles(drift, levy, init, cfg, snapshot_times, 1) {
        Err(Error::Blowup { step, chain }) => {
            log::warn!("blow-up at step {step} of particle {chain}; retrying with dt/2");
            run_particles(drift, levy, init, cfg, snapshot_times, 2)
        }
        other => other,
    }
}

/// CSV rows `chain_id,t,x_1..x_d` for a list of snapshots.
pub fn snapshots_to_csv(snaps: &[Snapshot]) -> String {
    let d = snaps.first().map(|s| s.measure.dim()).unwrap_or(1);
    let mut s = String::from("chain_id,t");
    for k in 1..=d {
        s.push_str(&format!(",x_{k}"));
    }
    s.push('\n');
    for sn in snaps {
        for (i, (p, _)) in sn.measure.iter().enumerate() {
            s.push_str(&format!("{i},{}", fmt17(sn.t)));
            for v in p {
                s.push(',');
                s.push_str(&fmt17(*v));
            }
            s.push('\n');
        }
    }
    s
}
