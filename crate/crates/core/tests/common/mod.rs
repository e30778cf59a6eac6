//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use mvlevy::levy_model::{sphere_area, stable_constant};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// `c_{1,α} = Γ(1+α) sin(πα/2)/π`, the classical one-dimensional constant.
pub fn c1_closed(alpha: f64) -> f64 {
    gamma(1.0 + alpha) * (PI * alpha / 2.0).sin() / PI
}

/// Composite Simpson rule on `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + h * i as f64;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * h / 3.0
}

/// `∫_{|z|>l} |z|^p c σ^α |z|^{-d-α} dz` in polar form with `r = e^u`.
pub fn tail_oracle(d: usize, alpha: f64, scale: f64, p: f64, l: f64) -> f64 {
    let c = stable_constant(d, alpha) * scale.powf(alpha) * sphere_area(d);
    let span = 80.0 / (alpha - p);
    simpson(|u| c * (u * (p - alpha)).exp(), l.ln(), l.ln() + span, 200_000)
}

pub fn ks_statistic(a: &mut [f64], b: &mut [f64]) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..n {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

/// Exhaustive optimal matching between two equal-size uniform samples.
pub fn assignment_w1(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    permutations(n)
        .iter()
        .map(|p| p.iter().enumerate().map(|(i, &j)| (x[i] - y[j]).abs()).sum::<f64>() / n as f64)
        .fold(f64::INFINITY, f64::min)
}

pub fn u(x: &[f64], b: f64) -> f64 {
    (1.0 + x.iter().map(|v| v * v).sum::<f64>()).powf(b / 2.0)
}

// Second transcription of the formulas, written against one-dimensional stable noise
// with closed-form tails.

/// Radial constant `2 c_{1,α} σ^α` with `c_{1,α} = Γ(1+α) sin(πα/2)/π`.
pub fn radial(alpha: f64, scale: f64) -> f64 {
    2.0 * gamma(1.0 + alpha) * (PI * alpha / 2.0).sin() / PI * scale.powf(alpha)
}

/// `ν(|·|^p 1_{|·|>l})`.
pub fn tail_cf(alpha: f64, scale: f64, p: f64, l: f64) -> f64 {
    radial(alpha, scale) * l.powf(p - alpha) / (alpha - p)
}

/// `ν(|·|^p 1_{|·|≤l})` for `p > α`.
pub fn ball_cf(alpha: f64, scale: f64, p: f64, l: f64) -> f64 {
    radial(alpha, scale) * l.powf(p - alpha) / (p - alpha)
}

/// `J(κ)` in one dimension: twice the mass of `{z > κ/2}`.
pub fn j_cf(alpha: f64, scale: f64, kappa: f64) -> f64 {
    radial(alpha, scale) * (kappa / 2.0).powf(-alpha) / alpha
}

pub fn big_gamma(g: f64, a: f64, e: f64) -> f64 {
    let ind0 = if g == 0.0 { 1.0 } else { 0.0 };
    let ind1 = if g > 0.0 && g < 1.0 { 1.0 } else { 0.0 };
    let pow = if ind1 == 1.0 { (e / (1.0 - e) * a.ln()).exp() } else { 0.0 };
    (1.0 - e) * (ind0 + pow)
}

pub struct P {
    pub c_b: f64,
    pub l1: f64,
    pub l2: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
    pub b: f64,
}

impl P {
    pub fn bs(&self) -> f64 {
        self.b + self.t1 - 1.0
    }
    pub fn g1(&self) -> f64 {
        f64::max(self.b + self.t2 - 2.0, 0.0) / self.bs()
    }
    pub fn lib(&self) -> mvlevy::drift_model::A1Params {
        mvlevy::drift_model::A1Params::new(self.c_b, self.l1, self.l2, self.t1, self.t2, self.t3, self.t4, self.b).unwrap()
    }
}

pub fn phi_oracle(p: &P, alpha: f64, scale: f64, r: f64, l: f64) -> f64 {
    let hr = r * r / (1.0 + r * r);
    p.b * p.c_b
        + p.b * p.l1 * hr.powf(0.5 * (1.0 + p.t1)) * (1.0 + r * r).powf(0.5 * p.bs())
        + 0.5 * p.b * ball_cf(alpha, scale, 2.0, l)
        + tail_cf(alpha, scale, p.b, l)
}

pub fn den_oracle(p: &P, alpha: f64, scale: f64, e1: f64, e2: f64, r0: f64, l: f64) -> f64 {
    let hr = r0 * r0 / (1.0 + r0 * r0);
    let ind = if p.g1() > 0.0 && p.g1() < 1.0 { 1.0 } else { 0.0 };
    p.b * (p.l1 * hr.powf(0.5 * (1.0 + p.t1)) - e1 * p.l2 * ind - e2) - 2f64.powf(p.b / 2.0) * tail_cf(alpha, scale, p.b / 2.0, l)
}

#[allow(clippy::too_many_arguments)]
pub fn bound_oracle(p: &P, alpha: f64, scale: f64, e1: f64, e2: f64, r0: f64, l: f64, m: f64) -> f64 {
    let g1 = p.g1();
    let num = phi_oracle(p, alpha, scale, r0, l) + p.b * p.l2 * big_gamma(g1, g1 / e1, g1) * m.powf(p.t4 / (1.0 - g1));
    num / den_oracle(p, alpha, scale, e1, e2, r0, l)
}

pub fn ct_oracle(k1: f64, m: f64, t: f64) -> f64 {
    let x = m * t * (k1 * t).exp();
    (0.5 * 2f64.ln() + m.ln() + 0.5 * t.ln() + (k1 - m) * t + (1.0 + x).ln() + x).exp()
}

pub fn random_p(rng: &mut ChaCha8Rng, case_two: bool) -> P {
    let b = rng.gen_range(1.05..1.75);
    let t1 = rng.gen_range(1.0..3.0);
    let t2 = rng.gen_range(0.0..1.0);
    let bs = b + t1 - 1.0;
    let g1 = f64::max(b + t2 - 2.0, 0.0) / bs;
    let t3 = rng.gen_range(0.3..bs);
    let l1 = rng.gen_range(0.5..3.0);
    let (t4, l2) = if case_two {
        (bs * (1.0 - g1) / t3, rng.gen_range(0.05..0.9) * l1)
    } else {
        (rng.gen_range(0.2..0.9) * bs * (1.0 - g1) / t3, rng.gen_range(0.0..3.0))
    };
    P { c_b: rng.gen_range(0.0..2.0), l1, l2, t1, t2, t3, t4, b }
}

pub struct ApOracle {
    pub c: f64,
    pub a: f64,
    pub eps: f64,
    pub lambda0: f64,
    pub g1: f64,
    pub g: f64,
    pub c1: f64,
    pub c2: f64,
    pub cc: f64,
    pub lam: f64,
}

pub fn appendix_oracle(ap: &mvlevy::conditions::AppendixParams, jk: f64, g1: f64) -> ApOracle {
    let (k, kap, l0) = (ap.k, ap.kappa, ap.l0);
    let c = 1.0 + 16.0 * k * l0 / (jk * kap.powi(2));
    let ec = (-c * l0).exp();
    let a = 8.0 * k * c * (1.0 + kap) / jk + kap.powi(2) * c.powi(2) * ec;
    let eps = kap.powi(2) * c.powi(2) * ec * jk / (16.0 * ap.c_v);
    let lambda0 = f64::min(jk * kap.powi(2) * c.powi(2) * ec / (2.0 * (2.0 + a)), 3.0 * ap.lambda_v) / 4.0;
    let c2 = f64::min(2.0 * ap.k2, 1.0 / g1);
    let g = g1 + 2.0 / c2 * (ap.k1 * g1);
    let c1 = f64::exp(-c2 * g);
    ApOracle { c, a, eps, lambda0, g1, g, c1, c2, cc: (1.0 + 1.0 / c1) / 2.0, lam: c2 / (1.0 + f64::exp(2.0 * g)) }
}

pub fn o_log_lambda0(ap: &mvlevy::conditions::AppendixParams, jk: f64) -> f64 {
    let o = appendix_oracle(ap, jk, 1.0);
    let first = (jk * ap.kappa.powi(2) * o.c.powi(2)).ln() - o.c * ap.l0 - (2.0 * (2.0 + o.a)).ln();
    f64::min(first, (3.0 * ap.lambda_v).ln()) - 4f64.ln()
}
