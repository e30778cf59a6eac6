//! Lévy measure of the driving noise: functionals and increment sampling.
//!
//! The isotropic stable density is `c_{d,α} σ^α |z|^{-d-α}` with `c_{d,α}` fixed so that
//! the unit-scale process has characteristic function `exp(-|ξ|^α)`. `alpha = 2` denotes
//! Brownian motion with variance `σ² dt` per coordinate and no jump part.

use crate::error::{Error, Result};
use crate::quadrature::{integrate_breaks, integrate_from_neg_inf, integrate_to_inf, QuadOptions};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Open01, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::{gamma, gamma_lr, gamma_ur};
use std::f64::consts::PI;

/// Jump-size law of a compound Poisson noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum JumpDist {
    /// Isotropic centred Gaussian with per-coordinate standard deviation `std`.
    Gaussian { std: f64 },
}

/// Family of the Lévy measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LevyKind {
    Stable,
    TruncatedStable { cutoff: f64 },
    CompoundPoisson { rate: f64, jump_dist: JumpDist },
}

fn default_alpha() -> f64 {
    2.0
}
fn default_dim() -> usize {
    1
}

/// Driving noise specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevyMeasureSpec {
    #[serde(flatten)]
    pub kind: LevyKind,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub scale: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
}

/// Integration region for radial moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// `{|z| ≤ l}`
    Ball(f64),
    /// `{|z| > l}`
    Complement(f64),
}

impl LevyMeasureSpec {
    pub fn stable(alpha: f64, scale: f64, dim: usize) -> Result<Self> {
        let s = Self { kind: LevyKind::Stable, alpha, scale, dim };
        s.validate()?;
        Ok(s)
    }

    pub fn truncated_stable(alpha: f64, scale: f64, dim: usize, cutoff: f64) -> Result<Self> {
        let s = Self { kind: LevyKind::TruncatedStable { cutoff }, alpha, scale, dim };
        s.validate()?;
        Ok(s)
    }

    pub fn compound_poisson(rate: f64, std: f64, scale: f64, dim: usize) -> Result<Self> {
        let s = Self { kind: LevyKind::CompoundPoisson { rate, jump_dist: JumpDist::Gaussian { std } }, alpha: 2.0, scale, dim };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidSpec("dim must be at least 1".into()));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidSpec(format!("scale must be positive, got {}", self.scale)));
        }
        match &self.kind {
            LevyKind::Stable | LevyKind::TruncatedStable { .. } => {
                if !(self.alpha > 0.0 && self.alpha <= 2.0) {
                    return Err(Error::InvalidSpec(format!("alpha must lie in (0, 2], got {}", self.alpha)));
                }
                if let LevyKind::TruncatedStable { cutoff } = self.kind {
                    if !(cutoff > 0.0 && cutoff.is_finite()) {
                        return Err(Error::InvalidSpec(format!("cutoff must be positive, got {cutoff}")));
                    }
                    if self.alpha >= 2.0 {
                        return Err(Error::InvalidSpec("truncated stable needs alpha < 2".into()));
                    }
                }
            }
            LevyKind::CompoundPoisson { rate, jump_dist } => {
                if !(*rate > 0.0 && rate.is_finite()) {
                    return Err(Error::InvalidSpec(format!("rate must be positive, got {rate}")));
                }
                let JumpDist::Gaussian { std } = jump_dist;
                if !(*std > 0.0 && std.is_finite()) {
                    return Err(Error::InvalidSpec(format!("jump std must be positive, got {std}")));
                }
            }
        }
        Ok(())
    }

    /// True when the spec has no jump part (Brownian motion).
    pub fn is_brownian(&self) -> bool {
        matches!(self.kind, LevyKind::Stable) && self.alpha >= 2.0
    }

    /// True when ν(ℝ^d) = ∞.
    pub fn infinite_activity(&self) -> bool {
        !self.is_brownian() && !matches!(self.kind, LevyKind::CompoundPoisson { .. })
    }

    /// Lévy density at `z` (0 for Brownian specs).
    pub fn density(&self, z: &[f64]) -> f64 {
        let r = norm(z);
        self.radial_point_density(r)
    }

    /// Lévy density as a function of `|z|`.
    pub fn radial_point_density(&self, r: f64) -> f64 {
        let d = self.dim as f64;
        match &self.kind {
            LevyKind::Stable if self.is_brownian() => 0.0,
            LevyKind::Stable => stable_constant(self.dim, self.alpha) * self.scale.powf(self.alpha) * r.powf(-d - self.alpha),
            LevyKind::TruncatedStable { cutoff } => {
                if r > *cutoff {
                    0.0
                } else {
                    stable_constant(self.dim, self.alpha) * self.scale.powf(self.alpha) * r.powf(-d - self.alpha)
                }
            }
            LevyKind::CompoundPoisson { rate, jump_dist } => {
                let JumpDist::Gaussian { std } = jump_dist;
                let s = std * self.scale;
                rate * (-(r * r) / (2.0 * s * s)).exp() / (2.0 * PI * s * s).powf(d / 2.0)
            }
        }
    }

    /// `c' = c_{d,α} σ^α |S^{d-1}|`, so the radial stable density is `c' r^{-1-α}`.
    pub fn radial_constant(&self) -> f64 {
        stable_constant(self.dim, self.alpha) * self.scale.powf(self.alpha) * sphere_area(self.dim)
    }

    /// Total mass ν(ℝ^d).
    pub fn total_mass(&self) -> f64 {
        match &self.kind {
            LevyKind::CompoundPoisson { rate, .. } => *rate,
            _ if self.is_brownian() => 0.0,
            _ => f64::INFINITY,
        }
    }

    /// Vector moment ν(z 1_{a<|z|≤b}); zero for every symmetric spec.
    pub fn vector_moment(&self, _a: f64, _b: f64) -> Vec<f64> {
        vec![0.0; self.dim]
    }
}

/// Euclidean norm.
pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Surface area of the unit sphere in ℝ^d.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * PI.powf(h) / gamma(h)
}

/// Normalizing constant `c_{d,α}` of the unit-scale isotropic stable Lévy density.
pub fn stable_constant(d: usize, alpha: f64) -> f64 {
    let d = d as f64;
    alpha * 2f64.powf(alpha - 1.0) * gamma((d + alpha) / 2.0) / (PI.powf(d / 2.0) * gamma(1.0 - alpha / 2.0))
}

/// `∫_{a<|z|≤b} |z|^p ν(dz)` for a stable radial density `c' r^{-1-α}`, `0 ≤ a < b ≤ ∞`.
fn stable_shell(cp: f64, alpha: f64, p: f64, a: f64, b: f64) -> f64 {
    let e = p - alpha;
    if e == 0.0 {
        return cp * (b / a).ln();
    }
    let fa = if a == 0.0 { 0.0 } else { a.powf(e) };
    let fb = if b.is_infinite() { 0.0 } else { b.powf(e) };
    cp * (fb - fa) / e
}

/// `∫_{|z| ≤ l} |z|^p` or `∫_{|z| > l} |z|^p` against ν.
pub fn tail_moment(spec: &LevyMeasureSpec, p: f64, region: Region) -> Result<f64> {
    let l = match region {
        Region::Ball(l) | Region::Complement(l) => l,
    };
    if !(l > 0.0) || l.is_nan() {
        return Err(Error::InvalidRegion(l));
    }
    if p < 0.0 {
        return Err(Error::DivergentMoment { p, alpha: spec.alpha });
    }
    if spec.is_brownian() {
        return Ok(0.0);
    }
    let a = spec.alpha;
    match &spec.kind {
        LevyKind::Stable => {
            let cp = spec.radial_constant();
            match region {
                Region::Complement(l) => {
                    if p >= a {
                        return Err(Error::DivergentMoment { p, alpha: a });
                    }
                    Ok(cp * l.powf(p - a) / (a - p))
                }
                Region::Ball(l) => {
                    if p <= a {
                        return Err(Error::DivergentMoment { p, alpha: a });
                    }
                    Ok(cp * l.powf(p - a) / (p - a))
                }
            }
        }
        LevyKind::TruncatedStable { cutoff } => {
            let cp = spec.radial_constant();
            match region {
                Region::Complement(l) => Ok(if l >= *cutoff { 0.0 } else { stable_shell(cp, a, p, l, *cutoff) }),
                Region::Ball(l) => {
                    if p <= a {
                        return Err(Error::DivergentMoment { p, alpha: a });
                    }
                    Ok(stable_shell(cp, a, p, 0.0, l.min(*cutoff)))
                }
            }
        }
        LevyKind::CompoundPoisson { rate, jump_dist } => {
            // |z| = s·χ_d, and E[χ_d^p 1{χ_d ≤ u}] = 2^{p/2} Γ((d+p)/2) P((d+p)/2, u²/2) / Γ(d/2).
            let JumpDist::Gaussian { std } = jump_dist;
            let s = std * spec.scale;
            let d = spec.dim as f64;
            let k = (d + p) / 2.0;
            let u = (l / s).powi(2) / 2.0;
            let full = rate * s.powf(p) * 2f64.powf(p / 2.0) * gamma(k) / gamma(d / 2.0);
            Ok(match region {
                Region::Ball(_) => full * gamma_lr(k, u),
                Region::Complement(_) => full * gamma_ur(k, u),
            })
        }
    }
}

/// `∫_{l<|z|≤L} |z|^p ν(dz)`; finite for every `p ≥ 0` and `0 < l < L < ∞`.
pub fn shell_moment(spec: &LevyMeasureSpec, p: f64, l: f64, big_l: f64) -> Result<f64> {
    if !(l > 0.0) || !(big_l > l) {
        return Err(Error::InvalidRegion(l));
    }
    if spec.is_brownian() {
        return Ok(0.0);
    }
    match &spec.kind {
        LevyKind::Stable => Ok(stable_shell(spec.radial_constant(), spec.alpha, p, l, big_l)),
        LevyKind::TruncatedStable { cutoff } => {
            let hi = big_l.min(*cutoff);
            Ok(if hi <= l { 0.0 } else { stable_shell(spec.radial_constant(), spec.alpha, p, l, hi) })
        }
        LevyKind::CompoundPoisson { .. } => {
            Ok(tail_moment(spec, p, Region::Complement(l))? - tail_moment(spec, p, Region::Complement(big_l))?)
        }
    }
}

/// ν({z : z₁ > s}) for `s > 0`; by isotropy this is the mass of any half-space at distance `s`.
pub fn halfspace_mass(spec: &LevyMeasureSpec, s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::InvalidRegion(s));
    }
    if spec.is_brownian() {
        return Ok(0.0);
    }
    let a = spec.alpha;
    match &spec.kind {
        // The one-dimensional marginal of the isotropic density is the d = 1 stable density.
        LevyKind::Stable => Ok(stable_constant(1, a) * spec.scale.powf(a) * s.powf(-a) / a),
        LevyKind::TruncatedStable { cutoff } => {
            let r_max = *cutoff;
            if s >= r_max {
                return Ok(0.0);
            }
            let cs = stable_constant(spec.dim, a) * spec.scale.powf(a);
            if spec.dim == 1 {
                return Ok(cs * (s.powf(-a) - r_max.powf(-a)) / a);
            }
            let d = spec.dim;
            let opts = QuadOptions::with_tol(1e-13, 1e-11);
            let cap = |r: f64| -> f64 {
                let t = (s / r).clamp(-1.0, 1.0).acos();
                if d == 2 {
                    return 2.0 * t;
                }
                let inner = integrate_breaks(|th: f64| th.sin().powi(d as i32 - 2), &[0.0, t], opts).map(|q| q.value).unwrap_or(f64::NAN);
                sphere_area(d - 1) * inner
            };
            let q = integrate_breaks(|r: f64| r.powf(-1.0 - a) * cap(r), &[s, r_max], opts)?;
            if !q.value.is_finite() {
                return Err(Error::QuadratureFailure("cap integral".into()));
            }
            Ok(cs * q.value)
        }
        LevyKind::CompoundPoisson { rate, jump_dist } => {
            let JumpDist::Gaussian { std } = jump_dist;
            let n = Normal::new(0.0, std * spec.scale).map_err(|e| Error::InvalidSpec(e.to_string()))?;
            Ok(rate * n.sf(s))
        }
    }
}

/// Overlap mass `ν_x(ℝ^d) = ∫ min(ν(z), ν(z - x)) dz`.
///
/// In d = 1 the integral is computed by adaptive quadrature split at `0`, `x/2` and `x`.
/// In d ≥ 2 it equals twice the mass of the half-space at distance `|x|/2`.
pub fn overlap_mass(spec: &LevyMeasureSpec, x: &[f64]) -> Result<f64> {
    if x.len() != spec.dim {
        return Err(Error::DimensionMismatch { expected: spec.dim, found: x.len() });
    }
    let r = norm(x);
    if spec.is_brownian() {
        return Ok(0.0);
    }
    if r == 0.0 {
        return if spec.infinite_activity() { Err(Error::InfiniteOverlap) } else { Ok(spec.total_mass()) };
    }
    if spec.dim >= 2 {
        return Ok(2.0 * halfspace_mass(spec, r / 2.0)?);
    }
    let xs = x[0];
    let f = |z: f64| {
        let a = spec.radial_point_density(z.abs());
        let b = spec.radial_point_density((z - xs).abs());
        let v = a.min(b);
        if v < 1e-30 {
            0.0
        } else {
            v
        }
    };
    let opts = QuadOptions::with_tol(1e-12, 1e-12);
    let mut pts = vec![0.0, xs / 2.0, xs];
    if let LevyKind::TruncatedStable { cutoff } = spec.kind {
        pts.extend([-cutoff, cutoff, xs - cutoff, xs + cutoff]);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let lo = pts[0];
    let hi = *pts.last().expect("nonempty");
    let mid = integrate_breaks(f, &pts, opts)?.value;
    let left = integrate_from_neg_inf(f, lo, opts)?.value;
    let right = integrate_to_inf(f, hi, opts)?.value;
    Ok(left + mid + right)
}

/// `J(r) = inf_{|x| ≤ r} ν_x(ℝ^d)`.
///
/// Evaluated at `|x| = r`, cross-checked on the grid `r·k/5, k = 1..5`; the grid minimum is
/// returned if the radial monotonicity assumption is violated.
pub fn j_fn(spec: &LevyMeasureSpec, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidRegion(r));
    }
    let at = |t: f64| {
        let mut x = vec![0.0; spec.dim];
        x[0] = t;
        overlap_mass(spec, &x)
    };
    let v = at(r)?;
    let mut best = v;
    for k in 1..5 {
        let w = at(r * k as f64 / 5.0)?;
        if w < best * (1.0 - 1e-9) {
            best = w;
        }
    }
    if best < v {
        log::warn!("J({r}): overlap not minimal at |x| = r, using grid minimum");
    }
    Ok(best)
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Brownian { sd: f64 },
    Stable1D { alpha: f64, mult: f64 },
    StableSub { alpha: f64, mult: f64 },
    Truncated { small_sd: f64, poisson: Option<Poisson<f64>>, delta: f64, cutoff: f64, alpha: f64 },
    Compound { poisson: Poisson<f64>, sd: f64 },
}

/// Samples increments `Z_{t+dt} - Z_t` for a fixed `dt`.
#[derive(Debug, Clone)]
pub struct IncrementSampler {
    dim: usize,
    kind: SamplerKind,
}

impl IncrementSampler {
    pub fn new(spec: &LevyMeasureSpec, dt: f64) -> Result<Self> {
        spec.validate()?;
        if !(dt > 0.0) {
            return Err(Error::InvalidSpec(format!("dt must be positive, got {dt}")));
        }
        let a = spec.alpha;
        let kind = match &spec.kind {
            LevyKind::Stable if spec.is_brownian() => SamplerKind::Brownian { sd: spec.scale * dt.sqrt() },
            LevyKind::Stable => {
                let mult = spec.scale * dt.powf(1.0 / a);
                if spec.dim == 1 {
                    SamplerKind::Stable1D { alpha: a, mult }
                } else {
                    SamplerKind::StableSub { alpha: a, mult }
                }
            }
            LevyKind::TruncatedStable { cutoff } => {
                let delta = 0.01 * cutoff;
                let cp = spec.radial_constant();
                let rate = cp * (delta.powf(-a) - cutoff.powf(-a)) / a;
                let small_var = cp * delta.powf(2.0 - a) / (2.0 - a) / spec.dim as f64;
                let poisson =
                    if rate * dt > 0.0 { Some(Poisson::new(rate * dt).map_err(|e| Error::InvalidSpec(e.to_string()))?) } else { None };
                SamplerKind::Truncated { small_sd: (small_var * dt).sqrt(), poisson, delta, cutoff: *cutoff, alpha: a }
            }
            LevyKind::CompoundPoisson { rate, jump_dist } => {
                let JumpDist::Gaussian { std } = jump_dist;
                let poisson = Poisson::new(rate * dt).map_err(|e| Error::InvalidSpec(e.to_string()))?;
                SamplerKind::Compound { poisson, sd: std * spec.scale }
            }
        };
        Ok(Self { dim: spec.dim, kind })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// One increment of a one-dimensional process.
    #[inline]
    pub fn sample_scalar<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            SamplerKind::Brownian { sd } => {
                let g: f64 = StandardNormal.sample(rng);
                sd * g
            }
            SamplerKind::Stable1D { alpha, mult } => mult * cms_symmetric(*alpha, rng),
            _ => {
                let mut out = [0.0];
                self.sample_into(rng, &mut out);
                out[0]
            }
        }
    }

    /// Writes one increment into `out` (length `dim`).
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match &self.kind {
            SamplerKind::Brownian { sd } => {
                for o in out.iter_mut() {
                    let g: f64 = StandardNormal.sample(rng);
                    *o = sd * g;
                }
            }
            SamplerKind::Stable1D { alpha, mult } => out[0] = mult * cms_symmetric(*alpha, rng),
            SamplerKind::StableSub { alpha, mult } => {
                let amp = positive_stable(alpha / 2.0, rng).sqrt() * std::f64::consts::SQRT_2 * mult;
                for o in out.iter_mut() {
                    let g: f64 = StandardNormal.sample(rng);
                    *o = amp * g;
                }
            }
            SamplerKind::Truncated { small_sd, poisson, delta, cutoff, alpha } => {
                for o in out.iter_mut() {
                    let g: f64 = StandardNormal.sample(rng);
                    *o = small_sd * g;
                }
                if let Some(p) = poisson {
                    let n = p.sample(rng) as u64;
                    let (lo, hi) = (delta.powf(-alpha), cutoff.powf(-alpha));
                    for _ in 0..n {
                        let u: f64 = Open01.sample(rng);
                        let r = (lo - u * (lo - hi)).powf(-1.0 / alpha);
                        add_random_direction(rng, r, out);
                    }
                }
            }
            SamplerKind::Compound { poisson, sd } => {
                let n = poisson.sample(rng);
                let amp = sd * n.sqrt();
                for o in out.iter_mut() {
                    let g: f64 = StandardNormal.sample(rng);
                    *o = amp * g;
                }
            }
        }
    }
}

fn add_random_direction<R: Rng + ?Sized>(rng: &mut R, r: f64, out: &mut [f64]) {
    if out.len() == 1 {
        out[0] += if rng.gen::<bool>() { r } else { -r };
        return;
    }
    let mut g = vec![0.0; out.len()];
    let mut n2 = 0.0;
    while n2 == 0.0 {
        for v in g.iter_mut() {
            *v = StandardNormal.sample(rng);
        }
        n2 = g.iter().map(|v| v * v).sum::<f64>();
    }
    let n = n2.sqrt();
    for (o, v) in out.iter_mut().zip(g) {
        *o += r * v / n;
    }
}

/// Symmetric stable draw with characteristic function `exp(-|t|^α)` (Chambers–Mallows–Stuck).
pub fn cms_symmetric<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    let v = PI * (u - 0.5);
    let w: f64 = Exp1.sample(rng);
    if (alpha - 1.0).abs() < 1e-12 {
        return v.tan();
    }
    let t1 = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    let t2 = (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha);
    t1 * t2
}

/// Positive stable draw of index `a ∈ (0,1)` with Laplace transform `exp(-s^a)` (Kanter).
pub fn positive_stable<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    let th = PI * u;
    let w: f64 = Exp1.sample(rng);
    let t1 = (a * th).sin() / th.sin().powf(1.0 / a);
    let t2 = (((1.0 - a) * th).sin() / w).powf((1.0 - a) / a);
    t1 * t2
}

/// One increment of `Z` over a window of length `dt`.
pub fn sample_increment<R: Rng + ?Sized>(spec: &LevyMeasureSpec, dt: f64, rng: &mut R) -> Result<Vec<f64>> {
    let s = IncrementSampler::new(spec, dt)?;
    let mut out = vec![0.0; spec.dim];
    s.sample_into(rng, &mut out);
    Ok(out)
}

/// Validated piecewise-linear σ on `[0, 2ℓ₀]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaSpec {
    /// Knots `(r, value)` in increasing `r`.
    pub knots: Vec<(f64, f64)>,
}

impl SigmaSpec {
    /// Checks positivity, monotonicity and concavity on the knots.
    pub fn validate_shape(&self) -> Result<()> {
        let k = &self.knots;
        if k.len() < 2 {
            return Err(Error::SigmaViolatesH2("need at least two knots".into()));
        }
        if k[0].0 != 0.0 {
            return Err(Error::SigmaViolatesH2("first knot must be at r = 0".into()));
        }
        for w in k.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::SigmaViolatesH2("knots must be strictly increasing in r".into()));
            }
            if w[1].1 < w[0].1 {
                return Err(Error::SigmaViolatesH2("sigma must be non-decreasing".into()));
            }
        }
        if k.iter().any(|p| !(p.1 > 0.0)) {
            return Err(Error::SigmaViolatesH2("sigma must be positive".into()));
        }
        let slopes: Vec<f64> = k.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
        for s in slopes.windows(2) {
            if s[1] > s[0] * (1.0 + 1e-12) + 1e-15 {
                return Err(Error::SigmaViolatesH2("sigma must be concave".into()));
            }
        }
        Ok(())
    }

    /// Right end of the support.
    pub fn r_max(&self) -> f64 {
        self.knots.last().map(|k| k.0).unwrap_or(0.0)
    }

    /// σ(r) by linear interpolation (constant beyond the last knot).
    pub fn eval(&self, r: f64) -> f64 {
        let k = &self.knots;
        if r <= k[0].0 {
            return k[0].1;
        }
        for w in k.windows(2) {
            if r <= w[1].0 {
                let t = (r - w[0].0) / (w[1].0 - w[0].0);
                return w[0].1 + t * (w[1].1 - w[0].1);
            }
        }
        k[k.len() - 1].1
    }

    /// `∫_0^r 1/σ(s) ds`, closed form per linear segment.
    pub fn integral_inverse(&self, r: f64) -> f64 {
        let k = &self.knots;
        let mut acc = 0.0;
        for w in k.windows(2) {
            let (r0, v0) = w[0];
            let (r1, v1) = w[1];
            if r <= r0 {
                break;
            }
            let hi = r.min(r1);
            let slope = (v1 - v0) / (r1 - r0);
            let vh = v0 + slope * (hi - r0);
            acc += if slope.abs() < 1e-14 { (hi - r0) / v0 } else { (vh / v0).ln() / slope };
        }
        if r > self.r_max() {
            acc += (r - self.r_max()) / k[k.len() - 1].1;
        }
        acc
    }

    /// Full validation: shape plus domination by `(1/(2r)) J(κ∧r) (κ∧r)²` on a grid.
    pub fn validate_h2(&self, spec: &LevyMeasureSpec, kappa: f64) -> Result<()> {
        self.validate_shape()?;
        let rm = self.r_max();
        for i in 1..=40 {
            let r = rm * i as f64 / 40.0;
            let m = kappa.min(r);
            let bound = j_fn(spec, m)? * m * m / (2.0 * r);
            if self.eval(r) > bound * (1.0 + 1e-12) {
                return Err(Error::SigmaViolatesH2(format!("sigma({r}) = {} exceeds (1/2r)J(k^r)(k^r)^2 = {bound}", self.eval(r))));
            }
        }
        Ok(())
    }
}
