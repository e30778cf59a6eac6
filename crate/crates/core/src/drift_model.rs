//! Drift families `b(x, μ)` and their Lyapunov parameters.

use crate::error::{Error, Result};
use crate::measures::EmpiricalMeasure;
use serde::{Deserialize, Serialize};

/// Bounded interaction function `g` of the asymmetric cubic family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "g_kind", rename_all = "snake_case")]
pub enum GFunction {
    /// `amplitude · tanh(y / width)`
    TanhScaled { amplitude: f64, width: f64 },
    /// `amplitude · cos(freq · y + phase)`
    Cosine { amplitude: f64, freq: f64, phase: f64 },
    /// `value`
    Constant { value: f64 },
}

impl GFunction {
    pub fn eval(&self, y: f64) -> f64 {
        match *self {
            GFunction::TanhScaled { amplitude, width } => amplitude * (y / width).tanh(),
            GFunction::Cosine { amplitude, freq, phase } => amplitude * (freq * y + phase).cos(),
            GFunction::Constant { value } => value,
        }
    }

    /// `sup |g|`.
    pub fn sup_abs(&self) -> f64 {
        match *self {
            GFunction::TanhScaled { amplitude, .. } | GFunction::Cosine { amplitude, .. } => amplitude.abs(),
            GFunction::Constant { value } => value.abs(),
        }
    }
}

/// Drift family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DriftSpec {
    /// `-λx(x-a₁)(x-a₂) - κ(x - μ(id))`
    #[serde(rename = "double_well_1d")]
    DoubleWell1D { lambda: f64, a1: f64, a2: f64, kappa: f64 },
    /// `-(λ/2)((x-y₁)|x-y₂|² + (x-y₂)|x-y₁|²) - κ(x - μ(id))`
    SymmetricTwoWell { lambda: f64, y1: Vec<f64>, y2: Vec<f64>, kappa: f64 },
    /// `-λx(x-1)(x+2) + κ[(1+x²)^{(β-1)/2} μ(|·|) + μ(g)]`
    #[serde(rename = "asymmetric_cubic_1d")]
    AsymmetricCubic1D { lambda: f64, kappa: f64, beta: f64, g: GFunction },
    /// `-λx + μ(id)`
    #[serde(rename = "mean_field_ou")]
    MeanFieldOU { lambda: f64 },
}

/// Measure statistics the built-in drifts depend on.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSummary {
    pub mean: Vec<f64>,
    pub mean_abs: f64,
    pub mean_g: f64,
}

impl DriftSpec {
    pub fn dim(&self) -> usize {
        match self {
            DriftSpec::SymmetricTwoWell { y1, .. } => y1.len(),
            _ => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{name} must be positive, got {v}")))
            }
        };
        let nonneg = |name: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidSpec(format!("{name} must be nonnegative, got {v}")))
            }
        };
        match self {
            DriftSpec::DoubleWell1D { lambda, a1, a2, kappa } => {
                pos("lambda", *lambda)?;
                nonneg("kappa", *kappa)?;
                if !(a1 * a2 < 0.0) {
                    return Err(Error::InvalidSpec(format!("a1*a2 must be negative, got a1={a1}, a2={a2}")));
                }
            }
            DriftSpec::SymmetricTwoWell { lambda, y1, y2, kappa } => {
                pos("lambda", *lambda)?;
                nonneg("kappa", *kappa)?;
                if y1.is_empty() || y1.len() != y2.len() {
                    return Err(Error::DimensionMismatch { expected: y1.len(), found: y2.len() });
                }
            }
            DriftSpec::AsymmetricCubic1D { lambda, kappa, beta, g } => {
                pos("lambda", *lambda)?;
                nonneg("kappa", *kappa)?;
                if !(*beta >= 1.0) {
                    return Err(Error::InvalidSpec(format!("beta must be at least 1, got {beta}")));
                }
                if !g.sup_abs().is_finite() {
                    return Err(Error::InvalidSpec("g must be bounded".into()));
                }
            }
            DriftSpec::MeanFieldOU { lambda } => {
                if !lambda.is_finite() {
                    return Err(Error::InvalidSpec("lambda must be finite".into()));
                }
            }
        }
        Ok(())
    }

    /// Interaction strength (0 means the drift ignores μ).
    pub fn kappa(&self) -> f64 {
        match self {
            DriftSpec::DoubleWell1D { kappa, .. }
            | DriftSpec::SymmetricTwoWell { kappa, .. }
            | DriftSpec::AsymmetricCubic1D { kappa, .. } => *kappa,
            DriftSpec::MeanFieldOU { .. } => 1.0,
        }
    }

    /// Statistics of `mu` needed by [`DriftSpec::eval_with`].
    pub fn summarize(&self, mu: &EmpiricalMeasure) -> Result<MeasureSummary> {
        if mu.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if mu.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: mu.dim() });
        }
        let mean = mu.mean();
        let (mean_abs, mean_g) = match self {
            DriftSpec::AsymmetricCubic1D { g, .. } => (mu.expect(|x| x[0].abs()), mu.expect(|x| g.eval(x[0]))),
            _ => (0.0, 0.0),
        };
        Ok(MeasureSummary { mean, mean_abs, mean_g })
    }

    /// Summary from raw 1-D or d-D particle coordinates with uniform weights.
    pub fn summarize_flat(&self, flat: &[f64]) -> MeasureSummary {
        let d = self.dim();
        let n = (flat.len() / d) as f64;
        let mut mean = vec![0.0; d];
        for row in flat.chunks(d) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let (mean_abs, mean_g) = match self {
            DriftSpec::AsymmetricCubic1D { g, .. } => {
                (flat.iter().map(|v| v.abs()).sum::<f64>() / n, flat.iter().map(|v| g.eval(*v)).sum::<f64>() / n)
            }
            _ => (0.0, 0.0),
        };
        MeasureSummary { mean, mean_abs, mean_g }
    }

    /// One-dimensional `b(x, μ)` given the summary of μ.
    #[inline]
    pub fn eval_scalar(&self, v: f64, s: &MeasureSummary) -> f64 {
        match self {
            DriftSpec::DoubleWell1D { lambda, a1, a2, kappa } => -lambda * v * (v - a1) * (v - a2) - kappa * (v - s.mean[0]),
            DriftSpec::AsymmetricCubic1D { lambda, kappa, beta, .. } => {
                -lambda * v * (v - 1.0) * (v + 2.0) + kappa * ((1.0 + v * v).powf((beta - 1.0) / 2.0) * s.mean_abs + s.mean_g)
            }
            DriftSpec::MeanFieldOU { lambda } => -lambda * v + s.mean[0],
            DriftSpec::SymmetricTwoWell { lambda, y1, y2, kappa } => {
                let (d1, d2) = ((v - y1[0]).powi(2), (v - y2[0]).powi(2));
                -0.5 * lambda * ((v - y1[0]) * d2 + (v - y2[0]) * d1) - kappa * (v - s.mean[0])
            }
        }
    }

    /// `b(x, μ)` given the summary of μ, written into `out`.
    pub fn eval_with(&self, x: &[f64], s: &MeasureSummary, out: &mut [f64]) {
        match self {
            DriftSpec::DoubleWell1D { lambda, a1, a2, kappa } => {
                let v = x[0];
                out[0] = -lambda * v * (v - a1) * (v - a2) - kappa * (v - s.mean[0]);
            }
            DriftSpec::SymmetricTwoWell { lambda, y1, y2, kappa } => {
                let d1: f64 = x.iter().zip(y1).map(|(a, b)| (a - b) * (a - b)).sum();
                let d2: f64 = x.iter().zip(y2).map(|(a, b)| (a - b) * (a - b)).sum();
                for k in 0..x.len() {
                    out[k] = -0.5 * lambda * ((x[k] - y1[k]) * d2 + (x[k] - y2[k]) * d1) - kappa * (x[k] - s.mean[k]);
                }
            }
            DriftSpec::AsymmetricCubic1D { lambda, kappa, beta, .. } => {
                let v = x[0];
                out[0] = -lambda * v * (v - 1.0) * (v + 2.0) + kappa * ((1.0 + v * v).powf((beta - 1.0) / 2.0) * s.mean_abs + s.mean_g);
            }
            DriftSpec::MeanFieldOU { lambda } => out[0] = -lambda * x[0] + s.mean[0],
        }
    }

    /// `⟨x, b₀(x)⟩` of the measure-free part, with the interaction replaced by its
    /// worst case after absorbing `λ₂(1+|x|²)^{θ₂/2} μ(|·|^{θ₃})^{θ₄}`.
    fn residual_lhs(&self, x: &[f64]) -> f64 {
        let zero = MeasureSummary { mean: vec![0.0; x.len()], mean_abs: 0.0, mean_g: 0.0 };
        let mut b = vec![0.0; x.len()];
        self.eval_with(x, &zero, &mut b);
        let xb: f64 = x.iter().zip(&b).map(|(a, c)| a * c).sum();
        match self {
            DriftSpec::AsymmetricCubic1D { kappa, g, .. } => xb + kappa * x[0].abs() * g.sup_abs(),
            DriftSpec::MeanFieldOU { .. } => xb,
            _ => xb,
        }
    }
}

/// `b(x, μ)` with measure integrals replaced by empirical averages.
pub fn eval_drift(spec: &DriftSpec, x: &[f64], mu: &EmpiricalMeasure) -> Result<Vec<f64>> {
    if x.len() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), found: x.len() });
    }
    let s = spec.summarize(mu)?;
    let mut out = vec![0.0; x.len()];
    spec.eval_with(x, &s, &mut out);
    Ok(out)
}

/// Which Lyapunov case applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum A1Case {
    /// `β*(1-γ₁) > θ₃θ₄`
    I,
    /// `β*(1-γ₁) = θ₃θ₄` and `λ₁ > λ₂`
    II,
}

/// Lyapunov parameters `(C_b, λ₁, λ₂, θ₁..θ₄, β)` with derived `β*`, `γ₁`, `γ₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct A1Params {
    pub c_b: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub theta4: f64,
    pub beta: f64,
    pub beta_star: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    /// `None` when neither case holds.
    pub case: Option<A1Case>,
}

/// Relative tolerance for the case (ii) equality.
pub const CASE_EQ_TOL: f64 = 1e-12;

/// `h(r) = r/(1+r)`.
pub fn h(r: f64) -> f64 {
    r / (1.0 + r)
}

impl A1Params {
    /// Validates the structural invariants and classifies the case.
    #[allow(clippy::too_many_arguments)]
    pub fn new(c_b: f64, lambda1: f64, lambda2: f64, theta1: f64, theta2: f64, theta3: f64, theta4: f64, beta: f64) -> Result<Self> {
        let bad = |m: String| Err(Error::Validation(m));
        if !(c_b >= 0.0 && lambda1 >= 0.0 && lambda2 >= 0.0) {
            return bad(format!("C_b, lambda1, lambda2 must be nonnegative (got {c_b}, {lambda1}, {lambda2})"));
        }
        if !(theta1 > 0.0 && theta3 > 0.0 && theta4 > 0.0 && theta2 >= 0.0) {
            return bad("theta1, theta3, theta4 must be positive and theta2 nonnegative".into());
        }
        if !(beta > 0.0) {
            return bad(format!("beta must be positive, got {beta}"));
        }
        if theta1 < 1.0 - beta / 2.0 {
            return bad(format!("theta1 = {theta1} < 1 - beta/2"));
        }
        if !(theta2 < 1.0 + theta1) {
            return bad(format!("theta2 = {theta2} must be < 1 + theta1"));
        }
        let beta_star = beta + theta1 - 1.0;
        if !(beta_star > 0.0) || theta3 > beta_star * (1.0 + 1e-15) {
            return bad(format!("theta3 = {theta3} must lie in (0, beta* = {beta_star}]"));
        }
        let gamma1 = (beta + theta2 - 2.0).max(0.0) / beta_star;
        let gamma2 = (beta - 1.0).max(0.0) / beta_star;
        if !(gamma1 < 1.0) {
            return bad(format!("gamma1 = {gamma1} must be < 1"));
        }
        let lhs = beta_star * (1.0 - gamma1);
        let rhs = theta3 * theta4;
        let case = if (lhs - rhs).abs() <= CASE_EQ_TOL * lhs.abs().max(rhs.abs()) {
            if lambda1 > lambda2 {
                Some(A1Case::II)
            } else {
                None
            }
        } else if lhs > rhs {
            Some(A1Case::I)
        } else {
            None
        };
        Ok(Self { c_b, lambda1, lambda2, theta1, theta2, theta3, theta4, beta, beta_star, gamma1, gamma2, case })
    }

    /// Right side of the Lyapunov inequality at `x` for a measure with `μ(|·|^{θ₃}) = m3`.
    pub fn rhs(&self, x: &[f64], m3: f64) -> f64 {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        self.c_b - self.lambda1 * r2.sqrt().powf(1.0 + self.theta1)
            + self.lambda2 * (1.0 + r2).powf(self.theta2 / 2.0) * m3.powf(self.theta4)
    }

    /// Returns a copy with `C_b` replaced.
    pub fn with_c_b(&self, c_b: f64) -> Result<Self> {
        Self::new(c_b, self.lambda1, self.lambda2, self.theta1, self.theta2, self.theta3, self.theta4, self.beta)
    }
}

/// Default β for a noise index: `(1+α)/2`.
pub fn default_beta(alpha: f64) -> f64 {
    (1.0 + alpha) / 2.0
}

fn c_b_supremum(spec: &DriftSpec, lambda1: f64, theta1: f64) -> f64 {
    let d = spec.dim();
    let f = |x: &[f64]| {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        spec.residual_lhs(x) + lambda1 * r.powf(1.0 + theta1)
    };
    let per_axis = match d {
        1 => 10_001,
        2 => 401,
        3 => 61,
        _ => 21,
    };
    let step = 100.0 / (per_axis - 1) as f64;
    let mut best: Vec<(f64, Vec<f64>)> = Vec::new();
    let total = (per_axis as u64).saturating_pow(d as u32);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let x: Vec<f64> = idx.iter().map(|&i| -50.0 + step * i as f64).collect();
        let v = f(&x);
        if best.len() < 8 || v > best[best.len() - 1].0 {
            best.push((v, x));
            best.sort_by(|a, b| b.0.total_cmp(&a.0));
            best.truncate(8);
        }
        for i in idx.iter_mut() {
            *i += 1;
            if *i < per_axis {
                break;
            }
            *i = 0;
        }
    }
    // Compass search around the best grid points.
    let mut sup = best[0].0;
    for (v0, x0) in best {
        let mut x = x0;
        let mut v = v0;
        let mut h = step;
        while h > 1e-9 {
            let mut improved = false;
            for k in 0..d {
                for s in [-1.0, 1.0] {
                    let mut y = x.clone();
                    y[k] += s * h;
                    let w = f(&y);
                    if w > v {
                        v = w;
                        x = y;
                        improved = true;
                    }
                }
            }
            if !improved {
                h *= 0.5;
            }
        }
        sup = sup.max(v);
    }
    sup
}

/// Lyapunov parameters of a built-in family for the given β.
///
/// `C_b` is 1.05 times the numerical supremum over `[-50, 50]^d` of the part of
/// `⟨x, b(x,μ)⟩ + λ₁|x|^{1+θ₁}` not absorbed by the measure term.
pub fn lyapunov_params(spec: &DriftSpec, beta: f64) -> Result<A1Params> {
    spec.validate()?;
    let (lambda1, lambda2, t1, t2, t3, t4) = match spec {
        DriftSpec::DoubleWell1D { lambda, kappa, .. } | DriftSpec::SymmetricTwoWell { lambda, kappa, .. } => {
            (lambda / 2.0, *kappa, 3.0, 1.0, 1.0, 1.0)
        }
        DriftSpec::AsymmetricCubic1D { lambda, kappa, beta: b, .. } => (lambda / 2.0, *kappa, 3.0, *b, 1.0, 1.0),
        DriftSpec::MeanFieldOU { lambda } => {
            if !(*lambda > 0.0) {
                return Err(Error::UnsupportedFamily(format!("mean-field OU needs lambda > 0, got {lambda}")));
            }
            (*lambda, 1.0, 1.0, 1.0, 1.0, 1.0)
        }
    };
    let sup = match spec {
        DriftSpec::MeanFieldOU { .. } => 0.0,
        _ => c_b_supremum(spec, lambda1, t1),
    };
    let c_b = (1.05 * sup).max(0.0);
    A1Params::new(c_b, lambda1, lambda2, t1, t2, t3, t4, beta)
}

/// One violation of the Lyapunov inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct E12Violation {
    pub x: Vec<f64>,
    pub measure_index: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// Outcome of [`verify_e12`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct E12Report {
    pub ok: bool,
    pub worst_slack: f64,
    pub violations: Vec<E12Violation>,
}

/// Checks `⟨x, b(x,μ)⟩ ≤ C_b - λ₁|x|^{1+θ₁} + λ₂(1+|x|²)^{θ₂/2} μ(|·|^{θ₃})^{θ₄}` on a grid.
pub fn verify_e12(spec: &DriftSpec, params: &A1Params, grid: &[Vec<f64>], measures: &[EmpiricalMeasure]) -> Result<E12Report> {
    if grid.is_empty() {
        return Err(Error::Validation("grid must be nonempty".into()));
    }
    let mut worst = f64::INFINITY;
    let mut violations = Vec::new();
    for (mi, mu) in measures.iter().enumerate() {
        let s = spec.summarize(mu)?;
        let m3 = crate::measures::moment(mu, params.theta3, None);
        let mut b = vec![0.0; spec.dim()];
        for x in grid {
            if x.len() != spec.dim() {
                return Err(Error::DimensionMismatch { expected: spec.dim(), found: x.len() });
            }
            spec.eval_with(x, &s, &mut b);
            let lhs: f64 = x.iter().zip(&b).map(|(a, c)| a * c).sum();
            let rhs = params.rhs(x, m3);
            let slack = rhs - lhs;
            worst = worst.min(slack);
            if slack < -1e-9 * (1.0 + lhs.abs().max(rhs.abs())) {
                violations.push(E12Violation { x: x.clone(), measure_index: mi, lhs, rhs });
            }
        }
    }
    Ok(E12Report { ok: violations.is_empty(), worst_slack: worst, violations })
}

/// Grid `[-10, 10]` step 0.1 along every axis and the diagonal.
pub fn canonical_grid(dim: usize) -> Vec<Vec<f64>> {
    let mut g = Vec::new();
    for i in 0..=200 {
        let t = -10.0 + 0.1 * i as f64;
        for k in 0..dim {
            let mut x = vec![0.0; dim];
            x[k] = t;
            g.push(x);
        }
        if dim > 1 {
            g.push(vec![t / (dim as f64).sqrt(); dim]);
        }
    }
    g
}

/// `{δ₀, δ₅e₁}`.
pub fn canonical_measures(dim: usize) -> Vec<EmpiricalMeasure> {
    let mut e = vec![0.0; dim];
    e[0] = 5.0;
    vec![EmpiricalMeasure::dirac(&vec![0.0; dim]), EmpiricalMeasure::dirac(&e)]
}
