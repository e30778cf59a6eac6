//! Experiment file schema, dotted-path overrides and cross-field validation.

use mvlevy::conditions::{AppendixParams, Ex14Input, Ex15Input, ThetaTuple};
use mvlevy::fixed_point::FixedPointConfig;
use mvlevy::{A1Params, DriftSpec, LevyMeasureSpec, SimConfig};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::PathBuf;

use crate::CliError;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "MVLEVY_OUTPUT_DIR";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levy: Option<LevyMeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<DriftSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_point: Option<FixedPointBlock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<Vec<f64>>,
    #[serde(default)]
    pub conditions: ConditionsBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<SampleBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Fixed-point settings; the simulation settings come from the top-level `sim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FixedPointBlock {
    pub max_iter: usize,
    pub w1_tol: f64,
    #[serde(default)]
    pub damping: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_star: Option<f64>,
    /// Concentration radius `M_*` for `multiplicity`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_star: Option<f64>,
}

/// Raw Lyapunov parameters; derived fields are recomputed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct A1Input {
    pub c_b: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub theta4: f64,
    pub beta: f64,
}

impl A1Input {
    pub fn build(&self) -> mvlevy::Result<A1Params> {
        A1Params::new(self.c_b, self.lambda1, self.lambda2, self.theta1, self.theta2, self.theta3, self.theta4, self.beta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradientInput {
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionsBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<A1Input>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaTuple>,
    /// Lyapunov β used when `a1` is derived from the drift.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov_beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ex14: Option<Ex14Input>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ex15: Option<Ex15Input>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub appendix: Option<AppendixParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient: Option<GradientInput>,
}

fn default_sample_n() -> usize {
    10_000
}

fn default_sample_dt() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleBlock {
    #[serde(default = "default_sample_n")]
    pub n: usize,
    #[serde(default = "default_sample_dt")]
    pub dt: f64,
    /// Falls back to `sim.seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimulateMode {
    #[default]
    Frozen,
    Particle,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateBlock {
    #[serde(default)]
    pub mode: SimulateMode,
    /// Starting point of every chain; the origin when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<f64>>,
    /// Atoms of the uniform frozen measure; `δ_init` when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub frozen: Vec<Vec<f64>>,
    /// Atoms of the uniform initial law of the particles; `δ_init` when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial_atoms: Vec<Vec<f64>>,
    /// Particle snapshot times; `{0, T/2, T}` when empty.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub snapshot_times: Vec<f64>,
}

/// Sets `path` (dot separated) in `root` to `value`, creating objects along the way.
pub fn apply_override(root: &mut Value, path: &str, value: Value) -> Result<(), CliError> {
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(CliError::Validation(format!("malformed override path '{path}'")));
    }
    let mut cur = root;
    for (i, k) in keys.iter().enumerate() {
        if !cur.is_object() {
            if cur.is_null() {
                *cur = Value::Object(Default::default());
            } else {
                return Err(CliError::Validation(format!("override '{path}': '{}' is not an object", keys[..i].join("."))));
            }
        }
        let obj = cur.as_object_mut().expect("object");
        if i + 1 == keys.len() {
            obj.insert((*k).to_string(), value);
            return Ok(());
        }
        cur = obj.entry((*k).to_string()).or_insert(Value::Null);
    }
    unreachable!()
}

/// Parses `key=value`; the value is JSON when it parses, a string otherwise.
pub fn parse_override(s: &str) -> Result<(String, Value), CliError> {
    let (k, v) = s.split_once('=').ok_or_else(|| CliError::Validation(format!("override '{s}' must be key=value")))?;
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.trim().to_string(), value))
}

/// Loads the experiment file (or an empty config) and applies the overrides.
pub fn load(path: Option<&std::path::Path>, overrides: &[String]) -> Result<ExperimentConfig, CliError> {
    let mut root = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Validation(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    for o in overrides {
        let (k, v) = parse_override(o)?;
        apply_override(&mut root, &k, v)?;
    }
    let cfg: ExperimentConfig = serde_json::from_value(root).map_err(|e| CliError::Validation(format!("config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

impl ExperimentConfig {
    /// Cross-field checks: dimensions of noise, drift, seeds and simulate atoms agree.
    pub fn validate(&self) -> Result<(), CliError> {
        if let Some(l) = &self.levy {
            l.validate()?;
        }
        if let Some(d) = &self.drift {
            d.validate()?;
        }
        if let Some(s) = &self.sim {
            s.validate()?;
        }
        let dim = match (&self.levy, &self.drift) {
            (Some(l), Some(d)) if l.dim != d.dim() => {
                return Err(CliError::Validation(format!("levy.dim = {} but the drift acts on dimension {}", l.dim, d.dim())));
            }
            (_, Some(d)) => Some(d.dim()),
            (Some(l), None) => Some(l.dim),
            (None, None) => None,
        };
        if let Some(d) = dim {
            let mut points: Vec<&Vec<f64>> = self.seeds.iter().collect();
            if let Some(sb) = &self.simulate {
                points.extend(sb.init.iter());
                points.extend(sb.frozen.iter());
                points.extend(sb.initial_atoms.iter());
            }
            if let Some(p) = points.iter().find(|p| p.len() != d) {
                return Err(CliError::Validation(format!("point {p:?} has dimension {}, expected {d}", p.len())));
            }
        }
        Ok(())
    }

    pub fn levy(&self) -> Result<&LevyMeasureSpec, CliError> {
        self.levy.as_ref().ok_or_else(|| missing("levy"))
    }

    pub fn drift(&self) -> Result<&DriftSpec, CliError> {
        self.drift.as_ref().ok_or_else(|| missing("drift"))
    }

    pub fn sim(&self) -> Result<&SimConfig, CliError> {
        self.sim.as_ref().ok_or_else(|| missing("sim"))
    }

    pub fn fixed_point_config(&self) -> Result<FixedPointConfig, CliError> {
        let b = self.fixed_point.as_ref().ok_or_else(|| missing("fixed_point"))?;
        let cfg = FixedPointConfig {
            max_iter: b.max_iter,
            w1_tol: b.w1_tol,
            sim: self.sim()?.clone(),
            damping: b.damping,
            beta_star: b.beta_star,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn missing(field: &str) -> CliError {
    CliError::Validation(format!("config field '{field}' is required by this subcommand"))
}
