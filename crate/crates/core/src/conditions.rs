//! Explicit bounds and sufficient conditions: the moment-bound machinery (Γ, Φ, Θ),
//! invariant-set thresholds, the double-well and two-well multiplicity criteria,
//! and the ergodicity constants.

use crate::drift_model::{h, A1Case, A1Params};
use crate::error::{Error, Result};
use crate::levy_model::{j_fn, norm, tail_moment, LevyMeasureSpec, Region, SigmaSpec};
use serde::{Deserialize, Serialize};

/// `(ε₁, ε₂, r₀, l)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaTuple {
    pub eps1: f64,
    pub eps2: f64,
    pub r0: f64,
    pub l: f64,
}

/// `Γ(γ, a, ε) = (1-ε)(1{γ=0} + a^{ε/(1-ε)} 1{γ∈(0,1)})`.
pub fn gamma_fn(gamma: f64, a: f64, eps: f64) -> f64 {
    if gamma == 0.0 {
        1.0 - eps
    } else if gamma > 0.0 && gamma < 1.0 {
        (1.0 - eps) * a.powf(eps / (1.0 - eps))
    } else {
        0.0
    }
}

/// `ν(|·|² 1_{|·|≤l})`, plus `d·σ²` for Brownian noise (the trace of its covariance).
pub fn small_second_moment(levy: &LevyMeasureSpec, l: f64) -> Result<f64> {
    if levy.is_brownian() {
        return Ok(levy.dim as f64 * levy.scale * levy.scale);
    }
    tail_moment(levy, 2.0, Region::Ball(l))
}

/// `Φ(ε₂, r, l)`.
pub fn phi_fn(p: &A1Params, levy: &LevyMeasureSpec, eps2: f64, r: f64, l: f64) -> Result<f64> {
    if !(l > 1.0) {
        return Err(Error::Validation(format!("l must exceed 1, got {l}")));
    }
    if !(eps2 > 0.0) || !(r >= 0.0) {
        return Err(Error::Validation("eps2 must be positive and r nonnegative".into()));
    }
    let b = p.beta;
    let vm = norm(&levy.vector_moment(1.0, l));
    let gamma_term =
        if vm == 0.0 { 0.0 } else { b * gamma_fn((b - 1.0).max(0.0), p.gamma2 / eps2, p.gamma2) * vm.powf(1.0 / (1.0 - p.gamma2)) };
    let r2 = r * r;
    let lyap = b * p.lambda1 * h(r2).powf((1.0 + p.theta1) / 2.0) * (1.0 + r2).powf(p.beta_star / 2.0);
    let small = 0.5 * b * small_second_moment(levy, l)?;
    let big = tail_moment(levy, b, Region::Complement(l))?;
    Ok(b * p.c_b + gamma_term + lyap + small + big)
}

fn indicator_gamma1(p: &A1Params) -> f64 {
    if p.gamma1 > 0.0 && p.gamma1 < 1.0 {
        1.0
    } else {
        0.0
    }
}

fn eps1_term(p: &A1Params, eps1: f64) -> f64 {
    if p.lambda2 == 0.0 || indicator_gamma1(p) == 0.0 {
        0.0
    } else {
        eps1 * p.lambda2
    }
}

/// Left side of the Θ membership inequality (the moment-bound denominator).
pub fn theta_lhs(p: &A1Params, levy: &LevyMeasureSpec, t: &ThetaTuple) -> Result<f64> {
    let (pos, neg) = theta_parts(p, levy, t)?;
    Ok(pos - neg)
}

fn theta_parts(p: &A1Params, levy: &LevyMeasureSpec, t: &ThetaTuple) -> Result<(f64, f64)> {
    if !(t.l >= 1.0) {
        return Err(Error::Validation(format!("l must be at least 1, got {}", t.l)));
    }
    let b = p.beta;
    let pos = b * p.lambda1 * h(t.r0 * t.r0).powf((1.0 + p.theta1) / 2.0);
    let tail = 2f64.powf(b / 2.0) * tail_moment(levy, b / 2.0, Region::Complement(t.l))?;
    let neg = b * (eps1_term(p, t.eps1) + t.eps2) + tail;
    Ok((pos, neg))
}

/// Strict Θ membership; the margin must exceed rounding (`1e-12` of the term magnitudes).
pub fn theta_member(p: &A1Params, levy: &LevyMeasureSpec, t: &ThetaTuple) -> Result<bool> {
    if !(t.eps1 > 0.0 && t.eps2 > 0.0 && t.r0 > 0.0) {
        return Ok(false);
    }
    let (pos, neg) = theta_parts(p, levy, t)?;
    Ok(pos - neg > 1e-12 * (pos.abs() + neg.abs()))
}

/// Bound on `π^μ(|·|^{β*})` given `μ(|·|^{θ₃})`.
pub fn moment_bound(p: &A1Params, levy: &LevyMeasureSpec, t: &ThetaTuple, mu_theta3_moment: f64) -> Result<f64> {
    if !theta_member(p, levy, t)? {
        return Err(Error::NotInTheta);
    }
    let den = theta_lhs(p, levy, t)?;
    let phi = phi_fn(p, levy, t.eps2, t.r0, t.l)?;
    let g1 = p.gamma1;
    let inter = if p.lambda2 == 0.0 {
        0.0
    } else {
        p.beta * p.lambda2 * gamma_fn(g1, g1 / t.eps1, g1) * mu_theta3_moment.powf(p.theta4 / (1.0 - g1))
    };
    Ok((phi + inter) / den)
}

/// Invariant-set threshold and the tuple realizing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MStar {
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub m_star: f64,
    pub chosen_l: f64,
    pub chosen_eps: ThetaTuple,
    pub case: A1Case,
}

/// Doubling grid for `l`.
pub const L_GRID_MAX_EXP: u32 = 20;

fn choose_l(levy: &LevyMeasureSpec, beta: f64, threshold: f64) -> Result<f64> {
    for k in 1..=L_GRID_MAX_EXP {
        let l = 2f64.powi(k as i32);
        let tail = 2f64.powf(beta / 2.0) * tail_moment(levy, beta / 2.0, Region::Complement(l))?;
        if tail <= threshold {
            return Ok(l);
        }
    }
    Err(Error::CaseViolation(format!("no l <= 2^{L_GRID_MAX_EXP} meets the tail threshold {threshold}")))
}

/// `γ₃ = θ₃θ₄/(β*(1-γ₁))`.
pub fn gamma3(p: &A1Params) -> f64 {
    p.theta3 * p.theta4 / (p.beta_star * (1.0 - p.gamma1))
}

/// `C₁*` with Young weight `δ = 2^{-(9+θ₁)/2} β λ₁` (the weight that closes the invariance).
pub fn c1_star(p: &A1Params, eps1: f64) -> f64 {
    if p.lambda2 == 0.0 {
        return 0.0;
    }
    let g3 = gamma3(p);
    let g1 = p.gamma1;
    let a = p.beta * p.lambda2 * gamma_fn(g1, g1 / eps1, g1);
    let inv_delta = 2f64.powf((9.0 + p.theta1) / 2.0) / (p.beta * p.lambda1);
    (1.0 - g3) * a.powf(1.0 / (1.0 - g3)) * (inv_delta * g3).powf(g3 / (1.0 - g3))
}

/// `M* = M₁* ∨ M₂*` with the `l` and `(ε₁, ε₂, r₀)` used to build it.
pub fn m_star(p: &A1Params, levy: &LevyMeasureSpec) -> Result<MStar> {
    let b = p.beta;
    match p.case {
        Some(A1Case::I) => {
            if !(p.lambda1 > 0.0) {
                return Err(Error::CaseViolation("case (i) needs lambda1 > 0".into()));
            }
            let l = choose_l(levy, b, 2f64.powf(-(7.0 + p.theta1) / 2.0) * b * p.lambda1)?;
            let eps1 = if p.lambda2 > 0.0 { p.lambda1 / (2f64.powf((3.0 + p.theta1) / 2.0) * p.lambda2) } else { 1.0 };
            let eps2 = p.lambda1 / 2f64.powf((7.0 + p.theta1) / 2.0);
            let phi = phi_fn(p, levy, eps2, 1.0, l)?;
            let m1 = 2f64.powf(2.0 + (5.0 + p.theta1) / 2.0) * (phi + c1_star(p, eps1)) / (3.0 * b * p.lambda1);
            Ok(MStar {
                m1: Some(m1),
                m2: None,
                m_star: m1,
                chosen_l: l,
                chosen_eps: ThetaTuple { eps1, eps2, r0: 1.0, l },
                case: A1Case::I,
            })
        }
        Some(A1Case::II) => {
            let (l1, l2) = (p.lambda1, p.lambda2);
            let l = choose_l(levy, b, b * (l1 - l2) / 8.0)?;
            let eps1 = if p.gamma1 > 0.0 { p.gamma1 } else { 1.0 };
            let eps2 = (l1 - l2) / 8.0;
            let q = ((l1 + l2) / 2.0 / l1).powf(1.0 / (1.0 + p.theta1));
            let r0 = q / (1.0 - q * q).sqrt();
            let m2 = 4.0 * phi_fn(p, levy, eps2, r0, l)? / (b * (l1 - l2));
            Ok(MStar { m1: None, m2: Some(m2), m_star: m2, chosen_l: l, chosen_eps: ThetaTuple { eps1, eps2, r0, l }, case: A1Case::II })
        }
        None => Err(Error::CaseViolation(format!(
            "beta*(1-gamma1) = {} vs theta3*theta4 = {} with lambda1 = {}, lambda2 = {}",
            p.beta_star * (1.0 - p.gamma1),
            p.theta3 * p.theta4,
            p.lambda1,
            p.lambda2
        ))),
    }
}

/// Tail functionals split at radius 1 used by the multiplicity criteria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseTerms {
    /// `ν(|·|^{β/2} 1_{|·|>1})`
    pub half: f64,
    /// `ν(|·|^β 1_{|·|>1})`
    pub beta: f64,
    /// `ν(|·|² 1_{|·|≤1})`
    pub two: f64,
}

impl NoiseTerms {
    pub fn new(levy: &LevyMeasureSpec, beta: f64) -> Result<Self> {
        Ok(Self {
            half: tail_moment(levy, beta / 2.0, Region::Complement(1.0))?,
            beta: tail_moment(levy, beta, Region::Complement(1.0))?,
            two: small_second_moment(levy, 1.0)?,
        })
    }
}

/// Parameters of the one-dimensional double-well criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ex14Input {
    pub lambda: f64,
    pub kappa: f64,
    pub beta: f64,
    pub eps: f64,
    pub r0: f64,
    pub a1: f64,
    pub a2: f64,
}

/// `g_{ε,a,b}(r₁, r₂)` of the double-well criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ex14G {
    pub lambda: f64,
    pub kappa: f64,
    pub beta: f64,
    pub eps: f64,
    pub noise: NoiseTerms,
}

impl Ex14G {
    pub fn eval(&self, a: f64, b: f64, r1: f64, r2: f64) -> f64 {
        let (l, k, be, e) = (self.lambda, self.kappa, self.beta, self.eps);
        let n = &self.noise;
        l * be * r1.powf(be) * (r1 * r1 - (2.0 * a - b).abs() * r1 + a * (a - b) + k / l - 1.0)
            - k * be * r1.powf(be - 1.0) * r2
            - 2f64.powf(be / 2.0) * n.half * r1.powf(be / 2.0)
            - e.powf(be / 2.0) * be * (l * a * (a - b) + k)
            - n.beta
            - be / 2.0 * e.powf(be / 2.0 - 1.0) * n.two
    }

    /// Convexity margin: `(a(a-b)+κ/λ-1)β(β-1)/((2+β)(1+β)) - β²|2a-b|²/(4(2+β)²)`.
    pub fn ww_star(&self, a: f64, b: f64) -> f64 {
        let be = self.beta;
        (a * (a - b) + self.kappa / self.lambda - 1.0) * be * (be - 1.0) / ((2.0 + be) * (1.0 + be))
            - be * be * (2.0 * a - b).powi(2) / (4.0 * (2.0 + be).powi(2))
    }
}

/// Values of `g` at the bracketing points for one `(a, b)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairBracket {
    pub a: f64,
    pub b: f64,
    pub g_at_zero: f64,
    pub g_at_r0: f64,
    pub convexity_margin: f64,
    /// `g(0, r₀) < 0 < g(r₀, r₀)`
    pub brackets: bool,
}

/// Outcome of [`ex14_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ex14Report {
    pub we_ok: bool,
    pub we2_ok: bool,
    pub convex_ok: bool,
    /// Right side of the `κ/λ` threshold.
    pub we_threshold: f64,
    pub we2_lhs: f64,
    pub we2_rhs: f64,
    pub pairs: Vec<PairBracket>,
    pub g: Ex14G,
}

fn check_beta(beta: f64, levy: &LevyMeasureSpec) -> Result<()> {
    if !(beta > 1.0 && beta < levy.alpha) {
        return Err(Error::Validation(format!("beta must lie in (1, alpha = {}), got {beta}", levy.alpha)));
    }
    Ok(())
}

/// Sides `(lhs, rhs)` of the double-well separation inequality.
pub fn we2_sides(inp: &Ex14Input, n: &NoiseTerms) -> (f64, f64) {
    let Ex14Input { lambda: l, kappa: k, beta: b, eps: e, r0, a1, a2 } = *inp;
    let lhs = (k * b * r0.powf(b)
        + 2f64.powf(b / 2.0) * n.half * r0.powf(b / 2.0)
        + e.powf(b / 2.0) * b * (l * (a1 * a1).max(a2 * a2) - l * a1 * a2 + k)
        + n.beta
        + b / 2.0 * e.powf(b / 2.0 - 1.0) * n.two)
        / (l * b);
    let m = a1.abs().min(a2.abs());
    let rhs = r0.powf(b) * ((r0 - m) * (r0 - (a1 - a2).abs()) + (k / l - 1.0));
    (lhs, rhs)
}

/// Double-well multiplicity criteria.
pub fn ex14_check(inp: &Ex14Input, levy: &LevyMeasureSpec) -> Result<Ex14Report> {
    let Ex14Input { lambda, kappa, beta, eps, r0, a1, a2 } = *inp;
    if !(a1 * a2 < 0.0) {
        return Err(Error::Validation(format!("a1*a2 must be negative (a1 = {a1}, a2 = {a2})")));
    }
    check_beta(beta, levy)?;
    if !(lambda > 0.0 && kappa >= 0.0 && eps > 0.0) {
        return Err(Error::Validation("lambda and eps must be positive, kappa nonnegative".into()));
    }
    let m = a1.abs().min(a2.abs());
    if !(r0 > 0.0 && r0 < m / 4.0) {
        return Err(Error::Validation(format!("r0 must lie in (0, {}), got {r0}", m / 4.0)));
    }
    let noise = NoiseTerms::new(levy, beta)?;
    let we_threshold = 1.0 + 2.0 * (a1 * a1 - a1 * a2 + a2 * a2) / ((beta - 1.0) * (2.0 + beta));
    let (we2_lhs, we2_rhs) = we2_sides(inp, &noise);
    let g = Ex14G { lambda, kappa, beta, eps, noise };
    let pairs: Vec<PairBracket> = [(a1, a2), (a2, a1), (0.0, a1), (a1, 0.0), (0.0, a2), (a2, 0.0)]
        .iter()
        .map(|&(a, b)| {
            let g0 = g.eval(a, b, 0.0, r0);
            let gr = g.eval(a, b, r0, r0);
            PairBracket { a, b, g_at_zero: g0, g_at_r0: gr, convexity_margin: g.ww_star(a, b), brackets: g0 < 0.0 && gr > 0.0 }
        })
        .collect();
    Ok(Ex14Report {
        we_ok: kappa / lambda >= we_threshold,
        we2_ok: we2_lhs <= we2_rhs,
        convex_ok: pairs.iter().all(|p| p.convexity_margin >= 0.0),
        we_threshold,
        we2_lhs,
        we2_rhs,
        pairs,
        g,
    })
}

/// Feasibility witness for a separation inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub eps: f64,
    pub r0: f64,
    /// `rhs - lhs` at the witness.
    pub margin: f64,
}

fn witness_grid<F: Fn(f64, f64) -> (f64, f64)>(r0_max: f64, sides: F) -> Option<Witness> {
    let mut best: Option<Witness> = None;
    for i in 0..=40 {
        let eps = 10f64.powf(-4.0 + 4.0 * i as f64 / 40.0);
        for k in 1..=40 {
            let r0 = r0_max * k as f64 / 41.0;
            let (lhs, rhs) = sides(eps, r0);
            let margin = rhs - lhs;
            if margin >= 0.0 && best.is_none_or(|w| margin > w.margin) {
                best = Some(Witness { eps, r0, margin });
            }
        }
    }
    best
}

/// Grid search over `ε ∈ logspace(1e-4, 1)` and `r₀ ∈ (0, (|a₁|∧|a₂|)/4)` for a double-well separation witness
/// with the largest margin.
pub fn ex14_witness(lambda: f64, kappa: f64, beta: f64, a1: f64, a2: f64, levy: &LevyMeasureSpec) -> Result<Option<Witness>> {
    check_beta(beta, levy)?;
    let noise = NoiseTerms::new(levy, beta)?;
    let r0_max = a1.abs().min(a2.abs()) / 4.0;
    Ok(witness_grid(r0_max, |eps, r0| we2_sides(&Ex14Input { lambda, kappa, beta, eps, r0, a1, a2 }, &noise)))
}

/// Parameters of the two-well criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ex15Input {
    pub lambda: f64,
    pub kappa: f64,
    pub beta: f64,
    pub eps: f64,
    pub r0: f64,
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
}

/// `g_ε(r₁, r₂)` of the two-well criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ex15G {
    pub lambda: f64,
    pub kappa: f64,
    pub beta: f64,
    pub eps: f64,
    /// `|y₁ - y₂|`
    pub dist: f64,
    pub noise: NoiseTerms,
}

impl Ex15G {
    pub fn eval(&self, r1: f64, r2: f64) -> f64 {
        let (l, k, b, e, dd) = (self.lambda, self.kappa, self.beta, self.eps, self.dist);
        let n = &self.noise;
        l * b
            * (r1.powf(b + 2.0) - 1.5 * r1.powf(b + 1.0) * dd + (0.5 * dd * dd + k / l - e) * r1.powf(b)
                - (0.5 * dd * dd + k / l) * e.powf(b / 2.0)
                - k / l * r1.powf(b - 1.0) * r2)
            - 2f64.powf(b / 2.0) * n.half * r1.powf(b / 2.0)
            - 0.5 * b * e.powf((b - 2.0) / 2.0) * n.two
            - n.beta
    }
}

/// Outcome of [`ex15_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ex15Report {
    pub eq1_ok: bool,
    pub wq2_ok: bool,
    /// Right side of the `κ/λ` threshold.
    pub eq1_threshold: f64,
    pub wq2_lhs: f64,
    pub wq2_rhs: f64,
    pub g_at_zero: f64,
    pub g_at_r0: f64,
    pub g: Ex15G,
}

/// Sides `(lhs, rhs)` of the two-well separation inequality.
pub fn wq2_sides(lambda: f64, kappa: f64, beta: f64, eps: f64, r0: f64, dist: f64, n: &NoiseTerms) -> (f64, f64) {
    let (l, k, b, e) = (lambda, kappa, beta, eps);
    let lhs = (l * b * e * r0.powf(b)
        + 2f64.powf(b / 2.0) * n.half * r0.powf(b / 2.0)
        + l * b * e.powf(b / 2.0) * (0.5 * dist * dist + k / l)
        + n.beta
        + 0.5 * b * e.powf((b - 2.0) / 2.0) * n.two)
        / (l * b);
    let rhs = r0.powf(b) * (r0 - dist) * (r0 - dist / 2.0);
    (lhs, rhs)
}

/// Two-well multiplicity criteria.
pub fn ex15_check(inp: &Ex15Input, levy: &LevyMeasureSpec) -> Result<Ex15Report> {
    if inp.y1.len() != inp.y2.len() {
        return Err(Error::DimensionMismatch { expected: inp.y1.len(), found: inp.y2.len() });
    }
    check_beta(inp.beta, levy)?;
    if !(inp.lambda > 0.0 && inp.kappa >= 0.0 && inp.eps > 0.0) {
        return Err(Error::Validation("lambda and eps must be positive, kappa nonnegative".into()));
    }
    let diff: Vec<f64> = inp.y1.iter().zip(&inp.y2).map(|(a, b)| a - b).collect();
    let dist = norm(&diff);
    if !(inp.r0 > 0.0 && inp.r0 < dist / 4.0) {
        return Err(Error::Validation(format!("r0 must lie in (0, |y1-y2|/4 = {}), got {}", dist / 4.0, inp.r0)));
    }
    let noise = NoiseTerms::new(levy, inp.beta)?;
    let b = inp.beta;
    let eq1_threshold = inp.eps + (b * b + b + 16.0) * dist * dist / (16.0 * (b + 2.0) * (b - 1.0));
    let (wq2_lhs, wq2_rhs) = wq2_sides(inp.lambda, inp.kappa, b, inp.eps, inp.r0, dist, &noise);
    let g = Ex15G { lambda: inp.lambda, kappa: inp.kappa, beta: b, eps: inp.eps, dist, noise };
    Ok(Ex15Report {
        eq1_ok: inp.kappa / inp.lambda >= eq1_threshold,
        wq2_ok: wq2_lhs <= wq2_rhs,
        eq1_threshold,
        wq2_lhs,
        wq2_rhs,
        g_at_zero: g.eval(0.0, inp.r0),
        g_at_r0: g.eval(inp.r0, inp.r0),
        g,
    })
}

/// Grid search for a two-well separation witness.
pub fn ex15_witness(lambda: f64, kappa: f64, beta: f64, dist: f64, levy: &LevyMeasureSpec) -> Result<Option<Witness>> {
    check_beta(beta, levy)?;
    let noise = NoiseTerms::new(levy, beta)?;
    Ok(witness_grid(dist / 4.0, |eps, r0| wq2_sides(lambda, kappa, beta, eps, r0, dist, &noise)))
}

/// `C_t = √2 m √t e^{(K₁-m)t} (1 + m t e^{K₁t}) e^{m t e^{K₁t}}` with `m = ν(B₁^c)`.
pub fn ct_fn(k1: f64, nu_tail_mass: f64, t: f64) -> f64 {
    let m = nu_tail_mass;
    let e = (k1 * t).exp();
    std::f64::consts::SQRT_2 * m * t.sqrt() * ((k1 - m) * t).exp() * (1.0 + m * t * e) * (m * t * e).exp()
}

fn default_beta0() -> f64 {
    1.0
}

/// Inputs of the ergodicity constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixParams {
    /// One-sided Lipschitz constant `K` of the frozen drift.
    pub k: f64,
    /// Short-range expansion constant `K₁`.
    pub k1: f64,
    /// Long-range contraction constant `K₂`.
    pub k2: f64,
    /// Overlap radius `κ ∈ (0, 1]`.
    pub kappa: f64,
    pub l0: f64,
    pub c_v: f64,
    pub lambda_v: f64,
    #[serde(default = "default_beta0")]
    pub beta0: f64,
    /// Concave minorant; the largest admissible constant is used when absent.
    #[serde(default)]
    pub sigma: Option<SigmaSpec>,
}

/// Contraction constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixConstants {
    pub j_kappa: f64,
    pub c: f64,
    pub a: f64,
    pub eps: f64,
    pub lambda0: f64,
    /// `ln λ₀`, finite even when `e^{-c ℓ₀}` underflows.
    pub log_lambda0: f64,
    pub g1: f64,
    pub g: f64,
    pub c1: f64,
    pub c2: f64,
    pub c_contr: f64,
    pub lambda_contr: f64,
    /// `sup_{t > ln C/λ} (1 - C e^{-λt}) / C_t`; infinite when `ν(B₁^c) = 0`.
    pub k_star: f64,
}

/// Constant σ at `(1-1e-9)` times the overlap bound at `r = 2ℓ₀`, which is admissible since the bound decreases in `r`.
pub fn default_sigma(levy: &LevyMeasureSpec, kappa: f64, l0: f64) -> Result<SigmaSpec> {
    let r = 2.0 * l0;
    let m = kappa.min(r);
    let v = j_fn(levy, m)? * m * m / (2.0 * r) * (1.0 - 1e-9);
    if !(v > 0.0) {
        return Err(Error::ZeroOverlap);
    }
    Ok(SigmaSpec { knots: vec![(0.0, v), (r, v)] })
}

/// Coupling constants `(c, a, ε, λ₀)` and contraction constants `(C, λ)`.
pub fn appendix_constants(ap: &AppendixParams, levy: &LevyMeasureSpec) -> Result<AppendixConstants> {
    if !(ap.kappa > 0.0 && ap.kappa <= 1.0) {
        return Err(Error::Validation(format!("kappa must lie in (0, 1], got {}", ap.kappa)));
    }
    if !(ap.l0 >= 1.0) {
        return Err(Error::Validation(format!("l0 must be at least 1, got {}", ap.l0)));
    }
    if !(ap.k > 0.0 && ap.k1 > 0.0 && ap.k2 > 0.0 && ap.c_v > 0.0 && ap.lambda_v > 0.0) {
        return Err(Error::Validation("K, K1, K2, C_V, lambda_V must be positive".into()));
    }
    let jk = j_fn(levy, ap.kappa)?;
    if !(jk > 0.0) {
        return Err(Error::ZeroOverlap);
    }
    let (k, kap, l0) = (ap.k, ap.kappa, ap.l0);
    let c = 1.0 + 16.0 * k * l0 / (jk * kap * kap);
    let e = (-c * l0).exp();
    let a = 8.0 * k * c * (1.0 + kap) / jk + kap * kap * c * c * e;
    let eps = kap * kap * c * c * e * jk / (16.0 * ap.c_v);
    let lambda0 = 0.25 * (jk * kap * kap * c * c * e / (2.0 * (2.0 + a))).min(3.0 * ap.lambda_v);
    let log_first = jk.ln() + 2.0 * kap.ln() + 2.0 * c.ln() - c * l0 - (2.0 * (2.0 + a)).ln();
    let log_lambda0 = 0.25f64.ln() + log_first.min((3.0 * ap.lambda_v).ln());

    let sigma = match &ap.sigma {
        Some(s) => {
            if s.r_max() < 2.0 * l0 * (1.0 - 1e-12) {
                return Err(Error::SigmaViolatesH2(format!("sigma must cover [0, 2 l0] = [0, {}]", 2.0 * l0)));
            }
            s.validate_h2(levy, kap)?;
            s.clone()
        }
        None => default_sigma(levy, kap, l0)?,
    };
    let r = 2.0 * l0;
    let g1 = sigma.integral_inverse(r);
    let c2 = (2.0 * ap.k2).min(1.0 / g1);
    let g = g1 + 2.0 / c2 * ap.k1 * g1;
    let c1 = (-c2 * g).exp();
    let c_contr = 0.5 * (1.0 + 1.0 / c1);
    let lambda_contr = c2 / (1.0 + (2.0 * g).exp());
    let mass = tail_moment(levy, 0.0, Region::Complement(1.0))?;
    let k_star = k_star(ap.k1, mass, c_contr, lambda_contr);
    Ok(AppendixConstants { j_kappa: jk, c, a, eps, lambda0, log_lambda0, g1, g, c1, c2, c_contr, lambda_contr, k_star })
}

/// `sup_{t > ln C/λ} (1 - C e^{-λt}) / C_t`, by a grid search with golden-section refinement.
pub fn k_star(k1: f64, mass: f64, c: f64, lambda: f64) -> f64 {
    if mass == 0.0 {
        return f64::INFINITY;
    }
    let t0 = c.ln().max(0.0) / lambda;
    let f = |t: f64| {
        let ct = ct_fn(k1, mass, t);
        if ct.is_finite() && ct > 0.0 {
            (1.0 - c * (-lambda * t).exp()) / ct
        } else {
            0.0
        }
    };
    let span = (50.0 / lambda).max(10.0);
    let n = 4000;
    let (mut best_t, mut best) = (t0, 0.0);
    for i in 1..=n {
        let t = t0 + span * (i as f64 / n as f64).powi(3);
        let v = f(t);
        if v > best {
            best = v;
            best_t = t;
        }
    }
    let (mut lo, mut hi) = ((best_t - span / n as f64).max(t0), best_t + span / n as f64);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let x1 = hi - phi * (hi - lo);
        let x2 = lo + phi * (hi - lo);
        if f(x1) > f(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    best.max(f(0.5 * (lo + hi)))
}

/// Conservative Foster–Lyapunov constants for `V = (1+|x|²)^{β/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LyapunovCandidates {
    pub c_v: f64,
    pub lambda_v: f64,
    pub l0: f64,
}

/// `λ_V = 2^{-(5+θ₁)/2}βλ₁`, `C_V = Φ(ε₂*, 1, l) + βλ₂Γ(γ₁, γ₁/ε₁*, γ₁) M*^{γ₃}` and
/// `ℓ₀ = 1 + sup{|x-y| : λ_V(V(x)+V(y)) ≤ 16 C_V}`.
pub fn lyapunov_candidates(p: &A1Params, levy: &LevyMeasureSpec) -> Result<LyapunovCandidates> {
    if !(p.lambda1 > 0.0) {
        return Err(Error::Validation("lambda1 must be positive".into()));
    }
    let b = p.beta;
    let ms = m_star(p, levy)?;
    let l = choose_l(levy, b, 2f64.powf(-(7.0 + p.theta1) / 2.0) * b * p.lambda1)?;
    let eps1 = if p.lambda2 > 0.0 { p.lambda1 / (2f64.powf((3.0 + p.theta1) / 2.0) * p.lambda2) } else { 1.0 };
    let eps2 = p.lambda1 / 2f64.powf((7.0 + p.theta1) / 2.0);
    let lambda_v = 2f64.powf(-(5.0 + p.theta1) / 2.0) * b * p.lambda1;
    let g1 = p.gamma1;
    let c_v = phi_fn(p, levy, eps2, 1.0, l)? + b * p.lambda2 * gamma_fn(g1, g1 / eps1, g1) * ms.m_star.powf(gamma3(p).min(1.0));
    let budget = 16.0 * c_v / lambda_v;
    let radius = |v: f64| if v <= 1.0 { 0.0 } else { (v.powf(2.0 / b) - 1.0).sqrt() };
    let mut sup: f64 = 0.0;
    if budget >= 2.0 {
        for i in 0..=2000 {
            let v = 1.0 + (budget - 2.0) * i as f64 / 2000.0;
            sup = sup.max(radius(v) + radius(budget - v));
        }
    }
    Ok(LyapunovCandidates { c_v, lambda_v, l0: 1.0 + sup })
}
