//! Subcommand bodies. Each writes a JSON report and CSV data into the output directory.

use mvlevy::conditions::{appendix_constants, ex14_check, ex15_check, lyapunov_candidates, m_star, theta_lhs, theta_member};
use mvlevy::drift_model::{canonical_grid, canonical_measures, default_beta, lyapunov_params, verify_e12};
use mvlevy::fixed_point::{invariance_check, iterate_lambda, multiplicity_search};
use mvlevy::levy_model::IncrementSampler;
use mvlevy::measures::{fmt17, moment};
use mvlevy::self_consistent::{beta_c, default_m_max, root_count, slope_at_zero, GradientCase, DEFAULT_GRID_N};
use mvlevy::simulate::{frozen_trajectory, particle_system, snapshots_to_csv};
use mvlevy::{rng, A1Params, EmpiricalMeasure, Error, InitialState, LevyKind};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

use crate::config::{ExperimentConfig, SimulateMode};
use crate::CliError;

pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
    pub strict: bool,
}

impl Ctx {
    fn write_json<T: Serialize>(&self, name: &str, v: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        write(&self.out.join(name), &text)
    }

    fn write_text(&self, name: &str, text: &str) -> Result<(), CliError> {
        write(&self.out.join(name), text)
    }

    fn write_csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_path(self.out.join(name)).map_err(|e| CliError::Io(e.to_string()))?;
        w.write_record(header).map_err(|e| CliError::Io(e.to_string()))?;
        for r in rows {
            w.write_record(r).map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn a1_params(cfg: &ExperimentConfig) -> Result<Option<A1Params>, CliError> {
    if let Some(a) = &cfg.conditions.a1 {
        return Ok(Some(a.build()?));
    }
    match (&cfg.drift, &cfg.levy) {
        (Some(d), Some(l)) => {
            let beta = cfg.conditions.lyapunov_beta.unwrap_or_else(|| default_beta(l.alpha.min(2.0)));
            Ok(Some(lyapunov_params(d, beta)?))
        }
        _ => Ok(None),
    }
}

/// Noise increments and their empirical characteristic function.
pub fn sample(ctx: &Ctx) -> Result<(), CliError> {
    let levy = ctx.cfg.levy()?;
    let sb = ctx.cfg.sample.clone().unwrap_or(crate::config::SampleBlock { n: 10_000, dt: 1.0, seed: None });
    let seed = sb
        .seed
        .or(ctx.cfg.sim.as_ref().map(|s| s.seed))
        .ok_or_else(|| CliError::Validation("sample needs sample.seed or sim.seed".into()))?;
    if sb.n == 0 {
        return Err(CliError::Validation("sample.n must be positive".into()));
    }
    let sampler = IncrementSampler::new(levy, sb.dt)?;
    let mut r = rng::stream(seed, 0);
    let d = levy.dim;
    let mut buf = vec![0.0; d];
    let mut rows = Vec::with_capacity(sb.n);
    let mut first = Vec::with_capacity(sb.n);
    for _ in 0..sb.n {
        sampler.sample_into(&mut r, &mut buf);
        first.push(buf[0]);
        rows.push(buf.iter().map(|v| fmt17(*v)).collect());
    }
    let header: Vec<String> = (1..=d).map(|k| format!("x_{k}")).collect();
    ctx.write_csv("increments.csv", &header.iter().map(String::as_str).collect::<Vec<_>>(), &rows)?;

    let cf: Vec<Value> = [0.25f64, 0.5, 1.0, 2.0]
        .iter()
        .map(|&t| {
            let ecf = first.iter().map(|v| (t * v).cos()).sum::<f64>() / first.len() as f64;
            let reference = match levy.kind {
                LevyKind::Stable if levy.is_brownian() => Some((-0.5 * levy.scale * levy.scale * sb.dt * t * t).exp()),
                LevyKind::Stable => Some((-sb.dt * (levy.scale * t).powf(levy.alpha)).exp()),
                _ => None,
            };
            json!({ "t": t, "empirical": ecf, "reference": reference })
        })
        .collect();
    let mut sorted = first.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let q = |p: f64| sorted[((p * (sorted.len() - 1) as f64).round()) as usize];
    ctx.write_json(
        "sample_report.json",
        &json!({
            "n": sb.n,
            "dt": sb.dt,
            "seed": seed,
            "dim": d,
            "first_coordinate": {
                "median": q(0.5),
                "quartiles": [q(0.25), q(0.75)],
                "mean_abs": first.iter().map(|v| v.abs()).sum::<f64>() / first.len() as f64,
                "characteristic_function": cf,
            }
        }),
    )
}

fn uniform_atoms(atoms: &[Vec<f64>]) -> Result<EmpiricalMeasure, CliError> {
    Ok(EmpiricalMeasure::from_points(atoms, None)?)
}

/// Frozen-measure chains or the coupled particle system.
pub fn simulate(ctx: &Ctx) -> Result<(), CliError> {
    let (drift, levy, sim) = (ctx.cfg.drift()?, ctx.cfg.levy()?, ctx.cfg.sim()?);
    let sb = ctx.cfg.simulate.clone().unwrap_or_default();
    let init = sb.init.clone().unwrap_or_else(|| vec![0.0; drift.dim()]);
    match sb.mode {
        SimulateMode::Frozen => {
            let frozen = if sb.frozen.is_empty() { EmpiricalMeasure::dirac(&init) } else { uniform_atoms(&sb.frozen)? };
            let occ = frozen_trajectory(drift, &frozen, levy, &InitialState::Point(init), sim)?;
            ctx.write_text("occupation.csv", &occ.measure.to_csv_string())?;
            let d1 = occ.measure.dim() == 1;
            ctx.write_json(
                "simulate_report.json",
                &json!({
                    "mode": "frozen",
                    "n_points": occ.measure.len(),
                    "n_chains": occ.n_chains,
                    "horizon": occ.horizon,
                    "dt_used": occ.dt,
                    "mean": occ.measure.mean(),
                    "mean_standard_error": occ.standard_error(),
                    "ess": occ.ess,
                    "variance": if d1 { Some(occ.measure.variance_1d()) } else { None },
                    "second_moment": moment(&occ.measure, 2.0, None),
                }),
            )
        }
        SimulateMode::Particle => {
            let start = if sb.initial_atoms.is_empty() { EmpiricalMeasure::dirac(&init) } else { uniform_atoms(&sb.initial_atoms)? };
            let times = if sb.snapshot_times.is_empty() { vec![0.0, 0.5 * sim.horizon, sim.horizon] } else { sb.snapshot_times.clone() };
            let snaps = particle_system(drift, levy, &start, sim, &times)?;
            ctx.write_text("snapshots.csv", &snapshots_to_csv(&snaps))?;
            let summary: Vec<Value> = snaps
                .iter()
                .map(|s| json!({ "t": s.t, "mean": s.measure.mean(), "second_moment": moment(&s.measure, 2.0, None) }))
                .collect();
            ctx.write_json(
                "simulate_report.json",
                &json!({ "mode": "particle", "n_particles": sim.n_chains, "horizon": sim.horizon, "snapshots": summary }),
            )
        }
    }
}

/// Iterates Λ from `δ` at the first seed (the origin when no seed is given).
pub fn fixpoint(ctx: &Ctx) -> Result<(), CliError> {
    let (drift, levy) = (ctx.cfg.drift()?, ctx.cfg.levy()?);
    let cfg = ctx.cfg.fixed_point_config()?;
    let y0 = ctx.cfg.seeds.first().cloned().unwrap_or_else(|| vec![0.0; drift.dim()]);
    let rep = iterate_lambda(drift, levy, &EmpiricalMeasure::dirac(&y0), &cfg)?;
    ctx.write_text("fixed_point.csv", &rep.final_measure.to_csv_string())?;
    let invariance = match (&ctx.cfg.conditions.a1, rep.converged) {
        (Some(a), true) => Some(invariance_check(&rep, &a.build()?, levy)?),
        _ => None,
    };
    ctx.write_json("fixpoint_report.json", &json!({ "start": y0, "report": rep, "invariance_ok": invariance }))
}

fn resolve_m_star(ctx: &Ctx) -> Result<f64, CliError> {
    if let Some(m) = ctx.cfg.fixed_point.as_ref().and_then(|b| b.m_star) {
        return Ok(m);
    }
    match &ctx.cfg.conditions.a1 {
        Some(a) => Ok(m_star(&a.build()?, ctx.cfg.levy()?)?.m_star),
        None => Err(CliError::Validation("multiplicity needs fixed_point.m_star or conditions.a1".into())),
    }
}

/// Fixed points from every seed with the pairwise separation test.
pub fn multiplicity(ctx: &Ctx) -> Result<(), CliError> {
    let (drift, levy) = (ctx.cfg.drift()?, ctx.cfg.levy()?);
    let cfg = ctx.cfg.fixed_point_config()?;
    if ctx.cfg.seeds.is_empty() {
        return Err(CliError::Validation("multiplicity needs at least one seed".into()));
    }
    let m = resolve_m_star(ctx)?;
    let rep = multiplicity_search(drift, levy, &ctx.cfg.seeds, m, &cfg)?;
    for (i, fp) in rep.fixed_points.iter().enumerate() {
        if let Some(fp) = fp {
            ctx.write_text(&format!("fixed_point_{i}.csv"), &fp.final_measure.to_csv_string())?;
        }
    }
    ctx.write_json("multiplicity_report.json", &json!({ "distinct_count": rep.distinct_count(), "report": rep }))?;
    if rep.errors.iter().all(|e| e.is_some()) {
        return Err(CliError::Numerical(format!("every seed failed: {:?}", rep.errors)));
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckItem {
    name: &'static str,
    passed: bool,
    detail: Value,
}

fn item<T: Serialize>(name: &'static str, passed: bool, detail: &T) -> CheckItem {
    CheckItem { name, passed, detail: serde_json::to_value(detail).unwrap_or(Value::Null) }
}

/// A failed condition is a result, not an error; everything else propagates.
fn soft<T>(name: &'static str, r: mvlevy::Result<T>, items: &mut Vec<CheckItem>) -> Result<Option<T>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e @ (Error::CaseViolation(_) | Error::NotInTheta | Error::SigmaViolatesH2(_) | Error::ZeroOverlap)) => {
            items.push(CheckItem { name, passed: false, detail: json!({ "error": e.to_string() }) });
            Ok(None)
        }
        Err(e) => Err(e.into()),
    }
}

/// Every sufficient condition that the config carries inputs for.
pub fn check(ctx: &Ctx) -> Result<(), CliError> {
    let c = &ctx.cfg.conditions;
    let levy = ctx.cfg.levy()?;
    let mut items = Vec::new();
    if let Some(inp) = &c.ex14 {
        let r = ex14_check(inp, levy)?;
        items.push(item("double_well", r.we_ok && r.we2_ok, &r));
    }
    if let Some(inp) = &c.ex15 {
        let r = ex15_check(inp, levy)?;
        items.push(item("two_well", r.eq1_ok && r.wq2_ok, &r));
    }
    if let Some(drift) = &ctx.cfg.drift {
        if let Some(p) = a1_params(&ctx.cfg)? {
            let r = verify_e12(drift, &p, &canonical_grid(drift.dim()), &canonical_measures(drift.dim()))?;
            items.push(item("lyapunov_inequality", r.ok, &json!({ "params": p, "result": r })));
        }
    }
    if let Some(p) = a1_params(&ctx.cfg)? {
        if let Some(ms) = soft("invariant_set", m_star(&p, levy), &mut items)? {
            items.push(item("invariant_set", ms.m_star.is_finite(), &ms));
        }
        if let Some(t) = &c.theta {
            let lhs = theta_lhs(&p, levy, t)?;
            let member = theta_member(&p, levy, t)?;
            items.push(item("theta_membership", member, &json!({ "tuple": t, "lhs": lhs })));
        }
        if p.lambda1 > 0.0 {
            if let Some(lc) = soft("lyapunov_constants", lyapunov_candidates(&p, levy), &mut items)? {
                items.push(item("lyapunov_constants", lc.c_v.is_finite() && lc.lambda_v > 0.0, &lc));
            }
        }
    }
    if let Some(ap) = &c.appendix {
        if let Some(k) = soft("contraction_constants", appendix_constants(ap, levy), &mut items)? {
            items.push(item("contraction_constants", k.log_lambda0.is_finite() && k.lambda_contr >= 0.0, &k));
        }
    }
    if items.is_empty() {
        return Err(CliError::Validation("check found no condition inputs (conditions.ex14/ex15/a1/theta/appendix or drift)".into()));
    }
    let all = items.iter().all(|i| i.passed);
    let rows: Vec<Vec<String>> = items.iter().map(|i| vec![i.name.to_string(), i.passed.to_string()]).collect();
    ctx.write_csv("checks.csv", &["check", "passed"], &rows)?;
    ctx.write_json("check_report.json", &json!({ "all_passed": all, "checks": items }))?;
    if ctx.strict && !all {
        let failed: Vec<&str> = items.iter().filter(|i| !i.passed).map(|i| i.name).collect();
        return Err(CliError::Strict(format!("failed checks: {}", failed.join(", "))));
    }
    Ok(())
}

/// Parses `a:b:step` into the inclusive grid `a, a+step, ..., ≤ b`.
pub fn parse_scan(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Validation(format!("beta scan '{s}' must be a:b:step")))?;
    let [a, b, step] = parts[..] else {
        return Err(CliError::Validation(format!("beta scan '{s}' must be a:b:step")));
    };
    if !(step > 0.0 && b >= a && a > 0.0) {
        return Err(CliError::Validation(format!("beta scan '{s}' needs 0 < a <= b and step > 0")));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| a + step * i as f64).collect())
}

/// Root counts of the self-consistency map along a β scan.
pub fn selfconsistent(ctx: &Ctx, gamma: Option<f64>, beta: Option<f64>, scan: Option<&str>) -> Result<(), CliError> {
    let g = ctx.cfg.conditions.gradient;
    let gamma = gamma
        .or(g.map(|g| g.gamma))
        .ok_or_else(|| CliError::Validation("selfconsistent needs --gamma or conditions.gradient.gamma".into()))?;
    let betas = match (scan, beta.or(g.and_then(|g| g.beta))) {
        (Some(s), _) => parse_scan(s)?,
        (None, Some(b)) => vec![b],
        (None, None) => return Err(CliError::Validation("selfconsistent needs --beta-scan or a beta".into())),
    };
    let mut rows = Vec::new();
    let mut table = Vec::new();
    for &b in &betas {
        let case = GradientCase::new(gamma, b)?;
        let slope = slope_at_zero(&case)?;
        let (count, roots, merged) = match root_count(&case, default_m_max(&case), DEFAULT_GRID_N) {
            Ok(r) => (r.count, r.roots, false),
            Err(Error::GridTooCoarse { left, right }) => (3, vec![left, 0.0, right], true),
            Err(e) => return Err(e.into()),
        };
        let joined: Vec<String> = roots.iter().map(|r| fmt17(*r)).collect();
        rows.push(vec![fmt17(b), count.to_string(), fmt17(slope), joined.join(";"), merged.to_string()]);
        table.push(json!({ "beta": b, "count": count, "slope_at_zero": slope, "roots": roots, "roots_merged": merged }));
    }
    ctx.write_csv("root_counts.csv", &["beta", "count", "slope_at_zero", "roots", "roots_merged"], &rows)?;
    let bc = match beta_c(gamma, 1e-3) {
        Ok(v) => serde_json::to_value(v).unwrap_or(Value::Null),
        Err(e @ Error::NoTransition { .. }) => json!({ "error": e.to_string() }),
        Err(e) => return Err(e.into()),
    };
    ctx.write_json("selfconsistent_report.json", &json!({ "gamma": gamma, "beta_c": bc, "scan": table }))
}

/// Contraction constants and, when Lyapunov inputs exist, the Foster–Lyapunov candidates.
pub fn constants(ctx: &Ctx) -> Result<(), CliError> {
    let levy = ctx.cfg.levy()?;
    let ap = ctx.cfg.conditions.appendix.as_ref().ok_or_else(|| CliError::Validation("constants needs conditions.appendix".into()))?;
    let k = appendix_constants(ap, levy)?;
    let lyap = match a1_params(&ctx.cfg)? {
        Some(p) if p.lambda1 > 0.0 => Some(lyapunov_candidates(&p, levy)?),
        _ => None,
    };
    let value = serde_json::to_value(&k).map_err(|e| CliError::Io(e.to_string()))?;
    let rows: Vec<Vec<String>> = value
        .as_object()
        .map(|o| o.iter().map(|(n, v)| vec![n.clone(), v.as_f64().map(fmt17).unwrap_or_else(|| v.to_string())]).collect())
        .unwrap_or_default();
    ctx.write_csv("constants.csv", &["name", "value"], &rows)?;
    ctx.write_json("constants_report.json", &json!({ "inputs": ap, "constants": k, "lyapunov": lyap }))
}
