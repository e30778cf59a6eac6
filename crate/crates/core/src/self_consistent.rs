//! Scalar gradient case with stationary density `∝ exp(γmx - x⁴ + βx²)`: the
//! self-consistency equation, its root structure and threshold, and the mean-field
//! Ornstein–Uhlenbeck dichotomy.

use crate::error::{Error, Result};
use crate::quadrature::{integrate_breaks, QuadOptions};
use serde::{Deserialize, Serialize};

/// Exponent drop below the maximum at which the integration domain is truncated.
pub const TRUNCATION_DROP: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientCase {
    pub gamma: f64,
    pub beta: f64,
}

impl GradientCase {
    pub fn new(gamma: f64, beta: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Validation(format!("gamma and beta must be positive (gamma = {gamma}, beta = {beta})")));
        }
        Ok(Self { gamma, beta })
    }

    /// `γmx - x⁴ + βx²`.
    pub fn exponent(&self, m: f64, x: f64) -> f64 {
        let x2 = x * x;
        self.gamma * m * x - x2 * x2 + self.beta * x2
    }

    /// Real critical points of the exponent, i.e. roots of `4x³ - 2βx - γm = 0`.
    fn critical_points(&self, m: f64) -> Vec<f64> {
        let d = |x: f64| 4.0 * x * x * x - 2.0 * self.beta * x - self.gamma * m;
        let bound = 1.0 + (self.beta / 2.0).sqrt() + (self.gamma * m.abs() / 4.0).cbrt();
        let n = 400;
        let xs: Vec<f64> = (0..=n).map(|i| -bound + 2.0 * bound * i as f64 / n as f64).collect();
        let mut out = Vec::new();
        for w in xs.windows(2) {
            let (fa, fb) = (d(w[0]), d(w[1]));
            if fa == 0.0 {
                out.push(w[0]);
            } else if fa * fb < 0.0 {
                let (mut a, mut b, mut fa) = (w[0], w[1], fa);
                for _ in 0..100 {
                    let c = 0.5 * (a + b);
                    let fc = d(c);
                    if fc == 0.0 || b - a < 1e-15 * (1.0 + c.abs()) {
                        a = c;
                        b = c;
                        break;
                    }
                    if fa * fc < 0.0 {
                        b = c;
                    } else {
                        a = c;
                        fa = fc;
                    }
                }
                out.push(0.5 * (a + b));
            }
        }
        if out.is_empty() {
            out.push(0.0);
        }
        out
    }

    /// `(E_max, X, breakpoints)`; the exponent is below `E_max - 60` for `|x| ≥ X`.
    pub fn domain(&self, m: f64) -> (f64, f64, Vec<f64>) {
        let crit = self.critical_points(m);
        let emax = crit.iter().map(|&x| self.exponent(m, x)).fold(f64::NEG_INFINITY, f64::max);
        let outer = crit.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
        let below = |x: f64| self.exponent(m, x) < emax - TRUNCATION_DROP && self.exponent(m, -x) < emax - TRUNCATION_DROP;
        let (mut lo, mut hi) = (outer, outer + 1.0);
        while !below(hi) {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if below(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-12 * hi {
                break;
            }
        }
        let mut pts = vec![-hi, 0.0, hi];
        pts.extend(crit.iter().copied().filter(|x| x.abs() < hi));
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        (emax, hi, pts)
    }
}

/// Scaled integrals `(I₀, I₁) = (∫e^{E-E_max}, ∫x e^{E-E_max})` and `E_max`.
/// Negative `m` uses the substitution `x → -x`, so `h` is odd bit for bit.
fn moments(case: &GradientCase, m: f64) -> Result<(f64, f64, f64)> {
    if m < 0.0 {
        let (emax, i0, i1) = moments(case, -m)?;
        return Ok((emax, i0, -i1));
    }
    let (emax, _, pts) = case.domain(m);
    let opts = QuadOptions::with_tol(1e-13, 1e-12);
    let i0 = integrate_breaks(|x| (case.exponent(m, x) - emax).exp(), &pts, opts)?;
    let i1 = integrate_breaks(|x| x * (case.exponent(m, x) - emax).exp(), &pts, opts)?;
    if !(i0.value > 0.0) {
        return Err(Error::QuadratureFailure(format!("normalizing mass vanished at m = {m}")));
    }
    Ok((emax, i0.value, i1.value))
}

/// `h(m) = ∫(x - m) e^{γmx - x⁴ + βx²} dx`.
pub fn h_fn(case: &GradientCase, m: f64) -> Result<f64> {
    let (emax, i0, i1) = moments(case, m)?;
    Ok(emax.exp() * (i1 - m * i0))
}

/// `h(m)/C(m)`: the mean of the tilted density minus `m`.
pub fn h_tilde(case: &GradientCase, m: f64) -> Result<f64> {
    let (_, i0, i1) = moments(case, m)?;
    Ok(i1 / i0 - m)
}

/// `h̃'(0) = γ Var₀ - 1` where `Var₀` is the variance of the untilted density.
pub fn slope_at_zero(case: &GradientCase) -> Result<f64> {
    let (emax, _, pts) = case.domain(0.0);
    let opts = QuadOptions::with_tol(1e-13, 1e-12);
    let i0 = integrate_breaks(|x| (case.exponent(0.0, x) - emax).exp(), &pts, opts)?.value;
    let i2 = integrate_breaks(|x| x * x * (case.exponent(0.0, x) - emax).exp(), &pts, opts)?.value;
    Ok(case.gamma * i2 / i0 - 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    /// Sign-change roots, ascending.
    pub roots: Vec<f64>,
    pub count: usize,
    /// Near-zero local extrema of `h` without a sign change.
    pub tangential: Vec<f64>,
}

/// Roots of `h` on `[-m_max, m_max]`: sign-change scan over `grid_n` cells refined by
/// bisection to `1e-8`. `h` is odd, so `0` is always a root and the scan runs over
/// `(0, m_max]`, mirrored.
pub fn root_count(case: &GradientCase, m_max: f64, grid_n: usize) -> Result<RootSet> {
    if grid_n < 1000 {
        return Err(Error::Validation(format!("grid_n must be at least 1000, got {grid_n}")));
    }
    if !(m_max > 0.0) {
        return Err(Error::Validation(format!("m_max must be positive, got {m_max}")));
    }
    let half = grid_n / 2;
    let cell = m_max / half as f64;
    let ms: Vec<f64> = (1..=half).map(|k| cell * k as f64).collect();
    let vals: Vec<f64> = ms.iter().map(|&m| h_tilde(case, m)).collect::<Result<_>>()?;
    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);

    let mut pos = Vec::new();
    let mut tangential = Vec::new();
    let mut prev_m = 0.0;
    let mut prev_v = f64::NAN;
    for (i, (&m, &v)) in ms.iter().zip(&vals).enumerate() {
        if i > 0 && prev_v * v < 0.0 {
            pos.push(bisect(case, prev_m, m, prev_v)?);
        } else if v == 0.0 {
            pos.push(m);
        }
        if i > 0 && i + 1 < vals.len() {
            let (a, c) = (vals[i - 1], vals[i + 1]);
            let extremum = (v.abs() < a.abs()) && (v.abs() < c.abs()) && a * c > 0.0 && a * v > 0.0;
            if extremum && v.abs() < 1e-6 * scale {
                tangential.push(m);
                tangential.push(-m);
            }
        }
        prev_m = m;
        prev_v = v;
    }
    let mut roots: Vec<f64> = pos.iter().rev().map(|r| -r).collect();
    roots.push(0.0);
    roots.extend(pos.iter().copied());
    for w in roots.windows(2) {
        if w[1] - w[0] < 3.0 * cell {
            return Err(Error::GridTooCoarse { left: w[0], right: w[1] });
        }
    }
    tangential.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let count = roots.len();
    Ok(RootSet { roots, count, tangential })
}

fn bisect(case: &GradientCase, mut a: f64, mut b: f64, mut fa: f64) -> Result<f64> {
    while b - a > 1e-8 {
        let c = 0.5 * (a + b);
        let fc = h_tilde(case, c)?;
        if fc == 0.0 {
            return Ok(c);
        }
        if fa * fc < 0.0 {
            b = c;
        } else {
            a = c;
            fa = fc;
        }
    }
    Ok(0.5 * (a + b))
}

/// Scan half-width covering every root: roots satisfy `m = mean_m`, bounded by the
/// largest stationary point of the exponent.
pub fn default_m_max(case: &GradientCase) -> f64 {
    1.5 * ((case.gamma + 2.0 * case.beta) / 4.0).sqrt() + 1.0
}

/// Default scan resolution.
pub const DEFAULT_GRID_N: usize = 1000;

/// Root count with the default scan window; grids too coarse to separate roots count as multistable.
pub fn count_at(gamma: f64, beta: f64) -> Result<usize> {
    let case = GradientCase::new(gamma, beta)?;
    match root_count(&case, default_m_max(&case), DEFAULT_GRID_N) {
        Ok(r) => Ok(r.count),
        Err(Error::GridTooCoarse { .. }) => Ok(3),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaCFlag {
    /// Transition located by bisection.
    Transition,
    /// Three roots already at the smallest scanned β.
    MultistableAtFloor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaC {
    pub gamma: f64,
    pub beta_c: f64,
    pub flag: BetaCFlag,
    /// `(12 - γ²)/(2γ)`.
    pub formula_value: f64,
}

/// `(12 - γ²)/(2γ)`.
pub fn beta_c_formula(gamma: f64) -> f64 {
    (12.0 - gamma * gamma) / (2.0 * gamma)
}

/// Smallest β at which the root count leaves 1, by a log-scan of `[1e-3, 1e2]` and bisection.
pub fn beta_c(gamma: f64, tol: f64) -> Result<BetaC> {
    if !(tol > 0.0) {
        return Err(Error::Validation(format!("tol must be positive, got {tol}")));
    }
    GradientCase::new(gamma, 1.0)?;
    let formula_value = beta_c_formula(gamma);
    let n = 60;
    let betas: Vec<f64> = (0..=n).map(|i| 10f64.powf(-3.0 + 5.0 * i as f64 / n as f64)).collect();
    if count_at(gamma, betas[0])? > 1 {
        return Ok(BetaC { gamma, beta_c: 0.0, flag: BetaCFlag::MultistableAtFloor, formula_value });
    }
    let mut prev = betas[0];
    for &b in &betas[1..] {
        if count_at(gamma, b)? > 1 {
            let (mut lo, mut hi) = (prev, b);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if count_at(gamma, mid)? > 1 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(BetaC { gamma, beta_c: 0.5 * (lo + hi), flag: BetaCFlag::Transition, formula_value });
        }
        prev = b;
    }
    Err(Error::NoTransition { gamma })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuKind {
    Unique,
    Continuum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OuClassification {
    pub kind: OuKind,
    pub mean_set: String,
    pub variance: f64,
}

/// Stationary laws of `dX = (-λX + E X) dt + dW`: Gaussian with variance `1/(2λ)`, mean 0 unless `λ = 1`.
pub fn ou_classify(lambda: f64) -> Result<OuClassification> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Validation(format!("lambda must be positive, got {lambda}")));
    }
    let variance = 1.0 / (2.0 * lambda);
    Ok(if lambda == 1.0 {
        OuClassification { kind: OuKind::Continuum, mean_set: "every m in R".into(), variance }
    } else {
        OuClassification { kind: OuKind::Unique, mean_set: "{0}".into(), variance }
    })
}

/// Normalized density `e^{γmx - x⁴ + βx²}/C` on `grid`; the grid must span the truncated domain.
pub fn stationary_density(case: &GradientCase, m: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.len() < 2 {
        return Err(Error::Validation("grid needs at least two points".into()));
    }
    let (emax, x_trunc, pts) = case.domain(m);
    let lo = grid.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = grid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo > -x_trunc || hi < x_trunc {
        return Err(Error::Validation(format!("grid [{lo}, {hi}] does not cover the effective support [{}, {}]", -x_trunc, x_trunc)));
    }
    let i0 = integrate_breaks(|x| (case.exponent(m, x) - emax).exp(), &pts, QuadOptions::with_tol(1e-13, 1e-12))?.value;
    Ok(grid.iter().map(|&x| (case.exponent(m, x) - emax).exp() / i0).collect())
}
