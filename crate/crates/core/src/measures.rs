//! Weighted point clouds and the distances used to compare them.

use crate::error::{Error, Result};
use crate::rng;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Finite weighted point cloud in ℝ^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeasure {
    dim: usize,
    /// Row-major `n × dim` coordinates.
    points: Vec<f64>,
    weights: Vec<f64>,
}

/// Options for the sliced W₁ approximation used when `d ≥ 2`.
#[derive(Debug, Clone, Copy)]
pub struct SlicedOptions {
    pub projections: usize,
    pub seed: u64,
}

impl Default for SlicedOptions {
    fn default() -> Self {
        Self { projections: 64, seed: 0x5eed_51ce }
    }
}

impl EmpiricalMeasure {
    /// Builds a measure from flat coordinates and weights; weights are renormalized.
    pub fn from_flat(dim: usize, points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("dimension must be positive".into()));
        }
        if points.len() != dim * weights.len() {
            return Err(Error::DimensionMismatch { expected: dim * weights.len(), found: points.len() });
        }
        if weights.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite coordinate".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Validation("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Validation("weights sum to zero".into()));
        }
        let weights = if (total - 1.0).abs() <= 1e-12 { weights } else { weights.iter().map(|w| w / total).collect() };
        Ok(Self { dim, points, weights })
    }

    /// Uniform weights over the rows of `points`.
    pub fn uniform(dim: usize, points: Vec<f64>) -> Result<Self> {
        if dim == 0 || !points.len().is_multiple_of(dim) {
            return Err(Error::Validation("coordinate count is not a multiple of dim".into()));
        }
        let n = points.len() / dim;
        if n == 0 {
            return Err(Error::EmptyMeasure);
        }
        Self::from_flat(dim, points, vec![1.0 / n as f64; n])
    }

    /// Uniform weights over a list of 1-D points.
    pub fn uniform_1d(xs: &[f64]) -> Result<Self> {
        Self::uniform(1, xs.to_vec())
    }

    /// Builds a measure from a list of vectors.
    pub fn from_points(points: &[Vec<f64>], weights: Option<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).ok_or(Error::EmptyMeasure)?;
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, found: p.len() });
        }
        let flat: Vec<f64> = points.iter().flatten().copied().collect();
        let n = points.len();
        Self::from_flat(dim, flat, weights.unwrap_or_else(|| vec![1.0 / n as f64; n]))
    }

    /// Dirac mass at `x`.
    pub fn dirac(x: &[f64]) -> Self {
        Self { dim: x.len(), points: x.to_vec(), weights: vec![1.0] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn flat_points(&self) -> &[f64] {
        &self.points
    }

    /// Iterates `(point, weight)` pairs.
    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points.chunks(self.dim).zip(self.weights.iter().copied())
    }

    /// Weighted mean vector.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for (p, w) in self.iter() {
            for (mi, pi) in m.iter_mut().zip(p) {
                *mi += w * pi;
            }
        }
        m
    }

    /// Weighted variance of the first coordinate.
    pub fn variance_1d(&self) -> f64 {
        let m = self.mean()[0];
        self.iter().map(|(p, w)| w * (p[0] - m).powi(2)).sum()
    }

    /// Weighted average of `f`.
    pub fn expect<F: Fn(&[f64]) -> f64>(&self, f: F) -> f64 {
        self.iter().map(|(p, w)| w * f(p)).sum()
    }

    /// Translates every point by `c`.
    pub fn shifted(&self, c: &[f64]) -> Self {
        let mut out = self.clone();
        for row in out.points.chunks_mut(self.dim) {
            for (x, ci) in row.iter_mut().zip(c) {
                *x += ci;
            }
        }
        out
    }

    /// `a·self + (1-a)·other` as a mixture of atoms.
    pub fn mixture(&self, other: &Self, a: f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: other.dim });
        }
        let mut points = self.points.clone();
        points.extend_from_slice(&other.points);
        let mut weights: Vec<f64> = self.weights.iter().map(|w| a * w).collect();
        weights.extend(other.weights.iter().map(|w| (1.0 - a) * w));
        Self::from_flat(self.dim, points, weights)
    }

    /// Systematic resampling to `n` uniform atoms.
    pub fn resample(&self, n: usize, seed: u64) -> Self {
        let mut r = rng::stream(seed, rng::tag("resample"));
        let u0: f64 = r.gen::<f64>() / n as f64;
        let mut points = Vec::with_capacity(n * self.dim);
        let mut cum = self.weights[0];
        let mut i = 0;
        for k in 0..n {
            let u = u0 + k as f64 / n as f64;
            while u > cum && i + 1 < self.len() {
                i += 1;
                cum += self.weights[i];
            }
            points.extend_from_slice(self.point(i));
        }
        Self { dim: self.dim, points, weights: vec![1.0 / n as f64; n] }
    }

    /// CSV rows `weight,x_1,..,x_d` with 17 significant digits.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("weight");
        for k in 1..=self.dim {
            s.push_str(&format!(",x_{k}"));
        }
        s.push('\n');
        for (p, w) in self.iter() {
            s.push_str(&fmt17(w));
            for v in p {
                s.push(',');
                s.push_str(&fmt17(*v));
            }
            s.push('\n');
        }
        s
    }

    /// Parses the output of [`EmpiricalMeasure::to_csv_string`].
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::EmptyMeasure)?;
        let dim = header.split(',').count() - 1;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| Error::Validation(format!("bad CSV value: {e}")))?;
            if vals.len() != dim + 1 {
                return Err(Error::DimensionMismatch { expected: dim + 1, found: vals.len() });
            }
            weights.push(vals[0]);
            points.extend_from_slice(&vals[1..]);
        }
        Self::from_flat(dim, points, weights)
    }
}

/// Round-trip formatting with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// `Σ w_i |x_i - center|^p`.
pub fn moment(mu: &EmpiricalMeasure, p: f64, center: Option<&[f64]>) -> f64 {
    let zero = vec![0.0; mu.dim()];
    let c = center.unwrap_or(&zero);
    mu.iter()
        .map(|(x, w)| {
            let r: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if r == 0.0 {
                0.0
            } else {
                w * r.powf(p)
            }
        })
        .sum()
}

/// Exact 1-D W₁ between weighted samples: `∫ |F(x) - G(x)| dx`.
pub fn w1_1d(xs: &[f64], ws: &[f64], ys: &[f64], vs: &[f64]) -> f64 {
    let mut a: Vec<(f64, f64)> = xs.iter().copied().zip(ws.iter().copied()).collect();
    let mut b: Vec<(f64, f64)> = ys.iter().copied().zip(vs.iter().copied()).collect();
    a.sort_by(|p, q| p.0.total_cmp(&q.0));
    b.sort_by(|p, q| p.0.total_cmp(&q.0));
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut last = f64::NAN;
    let mut total = 0.0;
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(p), Some(q)) => p.0.min(q.0),
            (Some(p), None) => p.0,
            (None, Some(q)) => q.0,
            (None, None) => unreachable!(),
        };
        if last.is_finite() {
            total += (fa - fb).abs() * (next - last);
        }
        while i < a.len() && a[i].0 == next {
            fa += a[i].1;
            i += 1;
        }
        while j < b.len() && b[j].0 == next {
            fb += b[j].1;
            j += 1;
        }
        last = next;
    }
    total
}

/// W₁ distance: exact in d = 1, sliced average over random projections otherwise.
pub fn w1(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    w1_with(mu, nu, SlicedOptions::default())
}

/// [`w1`] with explicit sliced-projection options.
pub fn w1_with(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, opts: SlicedOptions) -> Result<f64> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
    }
    if mu.dim() == 1 {
        return Ok(w1_1d(mu.flat_points(), mu.weights(), nu.flat_points(), nu.weights()));
    }
    let d = mu.dim();
    let mut r = rng::stream(opts.seed, rng::tag("sliced-w1"));
    let mut acc = 0.0;
    for _ in 0..opts.projections {
        let mut th: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut r)).collect();
        let n = th.iter().map(|v| v * v).sum::<f64>().sqrt();
        th.iter_mut().for_each(|v| *v /= n);
        let proj =
            |m: &EmpiricalMeasure| -> Vec<f64> { m.flat_points().chunks(d).map(|p| p.iter().zip(&th).map(|(a, b)| a * b).sum()).collect() };
        acc += w1_1d(&proj(mu), mu.weights(), &proj(nu), nu.weights());
    }
    Ok(acc / opts.projections as f64)
}

fn weight_fn(x: &[f64], beta0: f64) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    (1.0 + r2).powf(beta0 / 2.0)
}

/// Largest atom count for which weighted_tv is evaluated exactly on atoms.
pub const EXACT_ATOM_LIMIT: usize = 256;

/// Weighted total variation `Σ_b |p_b - q_b| U(c_b)`, `U(x) = (1+|x|²)^{β₀/2}`.
///
/// Exact on the atoms when the union support has at most [`EXACT_ATOM_LIMIT`] distinct
/// points; otherwise binned on a shared Freedman–Diaconis product grid (d ≤ 3).
pub fn weighted_tv(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, beta0: f64) -> Result<f64> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch { expected: mu.dim(), found: nu.dim() });
    }
    if !(beta0 > 0.0) {
        return Err(Error::Validation(format!("beta0 must be positive, got {beta0}")));
    }
    let d = mu.dim();
    let mut atoms: HashMap<Vec<u64>, (f64, f64)> = HashMap::new();
    for (p, w) in mu.iter() {
        atoms.entry(p.iter().map(|v| (v + 0.0).to_bits()).collect()).or_default().0 += w;
        if atoms.len() > EXACT_ATOM_LIMIT {
            break;
        }
    }
    if atoms.len() <= EXACT_ATOM_LIMIT {
        for (p, w) in nu.iter() {
            atoms.entry(p.iter().map(|v| (v + 0.0).to_bits()).collect()).or_default().1 += w;
            if atoms.len() > EXACT_ATOM_LIMIT {
                break;
            }
        }
    }
    if atoms.len() <= EXACT_ATOM_LIMIT {
        let mut rows: Vec<(Vec<f64>, f64)> =
            atoms.into_iter().map(|(k, (a, b))| (k.into_iter().map(f64::from_bits).collect(), (a - b).abs())).collect();
        rows.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite coordinates"));
        return Ok(rows.iter().map(|(x, diff)| diff * weight_fn(x, beta0)).sum());
    }
    if d > 3 {
        return Err(Error::Validation("binned weighted_tv supports d <= 3".into()));
    }
    let n_total = mu.len() + nu.len();
    let mut width = vec![0.0; d];
    let mut origin = vec![0.0; d];
    for k in 0..d {
        let mut col: Vec<f64> = mu.flat_points().chunks(d).chain(nu.flat_points().chunks(d)).map(|p| p[k]).collect();
        col.sort_by(f64::total_cmp);
        let q = |f: f64| col[((col.len() - 1) as f64 * f).round() as usize];
        let iqr = q(0.75) - q(0.25);
        let range = col[col.len() - 1] - col[0];
        let mut h = 2.0 * iqr / (n_total as f64).cbrt();
        if !(h > 0.0) {
            h = if range > 0.0 { range / (n_total as f64).sqrt() } else { 1.0 };
        }
        width[k] = h;
        origin[k] = col[0];
    }
    let key = |p: &[f64]| -> Vec<i64> { (0..d).map(|k| ((p[k] - origin[k]) / width[k]).floor() as i64).collect() };
    let mut bins: HashMap<Vec<i64>, (f64, f64)> = HashMap::new();
    for (p, w) in mu.iter() {
        bins.entry(key(p)).or_default().0 += w;
    }
    for (p, w) in nu.iter() {
        bins.entry(key(p)).or_default().1 += w;
    }
    let mut rows: Vec<(Vec<i64>, f64)> = bins.into_iter().map(|(k, (a, b))| (k, (a - b).abs())).collect();
    rows.sort_by(|x, y| x.0.cmp(&y.0));
    Ok(rows
        .iter()
        .map(|(k, diff)| {
            let c: Vec<f64> = (0..d).map(|i| origin[i] + (k[i] as f64 + 0.5) * width[i]).collect();
            diff * weight_fn(&c, beta0)
        })
        .sum())
}

/// `Σ w_i 1{|x_i - y| ≥ r}`.
pub fn concentration(mu: &EmpiricalMeasure, y: &[f64], r: f64) -> f64 {
    mu.iter().filter(|(x, _)| x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() >= r).fold(0.0, |acc, (_, w)| acc + w)
}
