//! Nonlinear color-to-gray projection `gl = L(α r + β g + γ b)`.
//!
//! The scalar curve `L` is either analytic (used by tests and synthetic
//! signals) or an isotonic piecewise-linear table fitted from fragment data by
//! [`estimate`].

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Result, TinctError};

/// Tolerance on `α + β + γ = 1`.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Default number of abscissa bins used by [`estimate`]; with every bin filled
/// and the two endpoint breakpoints this yields a 32-breakpoint table.
pub const DEFAULT_BINS: usize = 30;

/// Monotone piecewise-linear curve on `[xs[0], xs[n-1]]`, constant outside.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl CurveTable {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(TinctError::InvalidParameter(format!(
                "curve table needs >= 2 matching breakpoints, got {} abscissas and {} ordinates",
                xs.len(),
                ys.len()
            )));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(TinctError::InvalidParameter("non-finite breakpoint".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(TinctError::InvalidParameter(
                "curve abscissas must be strictly increasing".into(),
            ));
        }
        if ys.windows(2).any(|w| w[1] < w[0]) {
            return Err(TinctError::InvalidParameter(
                "curve ordinates must be non-decreasing".into(),
            ));
        }
        if let Some(&y) = ys.iter().find(|y| !(0.0..=1.0).contains(*y)) {
            return Err(TinctError::OutOfRange {
                value: y,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(Self { xs, ys })
    }

    pub fn abscissas(&self) -> &[f64] {
        &self.xs
    }

    pub fn ordinates(&self) -> &[f64] {
        &self.ys
    }

    /// Segment used at `s`: at a breakpoint the segment to its left.
    fn segment(&self, s: f64) -> usize {
        let p = self.xs.partition_point(|&x| x < s);
        p.saturating_sub(1).min(self.xs.len() - 2)
    }

    pub fn eval(&self, s: f64) -> f64 {
        let s = s.clamp(self.xs[0], self.xs[self.xs.len() - 1]);
        let j = self.segment(s);
        let t = (s - self.xs[j]) / (self.xs[j + 1] - self.xs[j]);
        (1.0 - t) * self.ys[j] + t * self.ys[j + 1]
    }

    pub fn slope(&self, s: f64) -> f64 {
        let j = self.segment(s);
        (self.ys[j + 1] - self.ys[j]) / (self.xs[j + 1] - self.xs[j])
    }

    /// Smallest `t` with `eval(t) = gl`.
    pub fn invert(&self, gl: f64) -> Result<f64> {
        let (lo, hi) = (self.ys[0], self.ys[self.ys.len() - 1]);
        if !(lo..=hi).contains(&gl) {
            return Err(TinctError::OutOfRange { value: gl, lo, hi });
        }
        let p = self.ys.partition_point(|&y| y < gl);
        if p == 0 {
            return Ok(self.xs[0]);
        }
        let j = p - 1;
        let (x0, x1, y0, y1) = (self.xs[j], self.xs[j + 1], self.ys[j], self.ys[j + 1]);
        let t = x0 + (gl - y0) / (y1 - y0) * (x1 - x0);
        Ok(t.clamp(x0, x1))
    }
}

/// The scalar map `L`.
#[derive(Debug, Clone, PartialEq)]
pub enum Curve {
    Identity,
    /// `1.8 (x+1)^2 (x-1/2)^2`: decreasing on `[-1, 1/2]`, increasing after.
    Quartic,
    Table(CurveTable),
}

impl Curve {
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Curve::Identity => s,
            Curve::Quartic => {
                let a = s + 1.0;
                let b = s - 0.5;
                1.8 * a * a * b * b
            }
            Curve::Table(t) => t.eval(s),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match self {
            Curve::Identity => 1.0,
            Curve::Quartic => {
                let a = s + 1.0;
                let b = s - 0.5;
                1.8 * (2.0 * a * b * b + 2.0 * a * a * b)
            }
            Curve::Table(t) => t.slope(s),
        }
    }

    /// A preimage of `gl`. Tables return the smallest one; the quartic is
    /// inverted on its increasing branch `[1/2, inf)`.
    pub fn invert(&self, gl: f64) -> Result<f64> {
        match self {
            Curve::Identity => {
                if (0.0..=1.0).contains(&gl) {
                    Ok(gl)
                } else {
                    Err(TinctError::OutOfRange {
                        value: gl,
                        lo: 0.0,
                        hi: 1.0,
                    })
                }
            }
            Curve::Quartic => {
                let hi = self.eval(1.0);
                if !(0.0..=hi).contains(&gl) {
                    return Err(TinctError::OutOfRange { value: gl, lo: 0.0, hi });
                }
                // (t + 1)(t - 1/2) = sqrt(gl / 1.8)
                let q = (gl / 1.8).sqrt();
                Ok((-0.5 + (2.25 + 4.0 * q).sqrt()) / 2.0)
            }
            Curve::Table(t) => t.invert(gl),
        }
    }

    /// Range of the curve over `[0, 1]` restricted to the invertible branch.
    pub fn invertible_range(&self) -> (f64, f64) {
        match self {
            Curve::Identity => (0.0, 1.0),
            Curve::Quartic => (0.0, self.eval(1.0)),
            Curve::Table(t) => (t.ys[0], t.ys[t.ys.len() - 1]),
        }
    }
}

/// `(M, L)` for the one-dimensional gray manifold: `L(w · rgb)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearProjection {
    weights: [f64; 3],
    curve: Curve,
}

impl NonlinearProjection {
    pub fn new(weights: [f64; 3], curve: Curve) -> Result<Self> {
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(TinctError::InvalidParameter(format!(
                "weights must be non-negative, got {weights:?}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(TinctError::InvalidParameter(format!(
                "weights must sum to 1, got {sum}"
            )));
        }
        Ok(Self { weights, curve })
    }

    /// `(r + g + b) / 3`.
    pub fn mean() -> Self {
        Self {
            weights: [1.0 / 3.0; 3],
            curve: Curve::Identity,
        }
    }

    pub fn weights(&self) -> [f64; 3] {
        self.weights
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn abscissa(&self, rgb: [f64; 3]) -> f64 {
        let w = self.weights;
        w[0] * rgb[0] + w[1] * rgb[1] + w[2] * rgb[2]
    }

    pub fn apply(&self, rgb: [f64; 3]) -> f64 {
        self.curve.eval(self.abscissa(rgb))
    }

    /// `∂L/∂x_k` at `rgb`, `k` in `0..3`.
    pub fn channel_derivative(&self, rgb: [f64; 3], k: usize) -> f64 {
        self.curve.derivative(self.abscissa(rgb)) * self.weights[k]
    }

    /// All three channel derivatives at once.
    pub fn gradient(&self, rgb: [f64; 3]) -> [f64; 3] {
        let d = self.curve.derivative(self.abscissa(rgb));
        self.weights.map(|w| d * w)
    }

    /// Achromatic section `τ(gl) = (t, t, t)` with `L(t) = gl`.
    pub fn section(&self, gl: f64) -> Result<[f64; 3]> {
        let t = self.curve.invert(gl)?;
        Ok([t; 3])
    }

    /// Section of `gl` clamped into the invertible range first.
    pub fn section_clamped(&self, gl: f64) -> [f64; 3] {
        let (lo, hi) = self.curve.invertible_range();
        let t = self
            .curve
            .invert(gl.clamp(lo, hi))
            .expect("clamped value lies in range");
        [t.clamp(0.0, 1.0); 3]
    }
}

/// Result of [`estimate`].
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub projection: NonlinearProjection,
    /// Mean squared residual of the observed gray about the fitted curve.
    pub variance: f64,
    pub sample_count: usize,
}

impl FitReport {
    /// Plain-text table: weights, variance, sample count, breakpoints.
    pub fn to_text(&self) -> String {
        let w = self.projection.weights();
        let mut out = String::new();
        let _ = writeln!(out, "# tinct projection fit");
        let _ = writeln!(out, "weights {} {} {}", w[0], w[1], w[2]);
        let _ = writeln!(out, "variance {}", self.variance);
        let _ = writeln!(out, "samples {}", self.sample_count);
        let _ = writeln!(out, "# abscissa ordinate");
        match self.projection.curve() {
            Curve::Table(t) => {
                for (x, y) in t.xs.iter().zip(&t.ys) {
                    let _ = writeln!(out, "{x} {y}");
                }
            }
            // analytic curves are tabulated for inspection
            c => {
                for i in 0..=32 {
                    let x = i as f64 / 32.0;
                    let _ = writeln!(out, "{x} {}", c.eval(x));
                }
            }
        }
        out
    }
}

/// Parses the table format written by [`FitReport::to_text`]. A missing
/// `weights` line defaults to equal weights.
pub fn parse_projection_table(text: &str) -> Result<NonlinearProjection> {
    let mut weights = [1.0 / 3.0; 3];
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    let bad = |line: &str| TinctError::InvalidParameter(format!("bad table line {line:?}"));
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "weights" => {
                if fields.len() != 4 {
                    return Err(bad(line));
                }
                for (w, f) in weights.iter_mut().zip(&fields[1..]) {
                    *w = f.parse().map_err(|_| bad(line))?;
                }
            }
            "variance" | "samples" => {}
            _ => {
                if fields.len() != 2 {
                    return Err(bad(line));
                }
                xs.push(fields[0].parse::<f64>().map_err(|_| bad(line))?);
                ys.push(fields[1].parse::<f64>().map_err(|_| bad(line))?);
            }
        }
    }
    NonlinearProjection::new(weights, Curve::Table(CurveTable::new(xs, ys)?))
}

/// Weighted pool-adjacent-violators: the non-decreasing sequence closest to
/// `values` in weighted least squares.
pub fn pool_adjacent_violators(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len());
    // blocks of (mean, weight, length)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&v, &w) in values.iter().zip(weights) {
        blocks.push((v, w, 1));
        while blocks.len() > 1 {
            let (m2, w2, n2) = blocks[blocks.len() - 1];
            let (m1, w1, n1) = blocks[blocks.len() - 2];
            if m1 <= m2 {
                break;
            }
            blocks.truncate(blocks.len() - 2);
            let w = w1 + w2;
            blocks.push(((m1 * w1 + m2 * w2) / w, w, n1 + n2));
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, n)| std::iter::repeat_n(m, n))
        .collect()
}

/// Weight candidates are `(a, b, c) / WEIGHT_DENOM` with `a + b + c = WEIGHT_DENOM`.
const WEIGHT_DENOM: i32 = 60;
/// Coarse grid step, in units of `1 / WEIGHT_DENOM` (0.05).
const COARSE_STRIDE: i32 = 3;

fn grid_weights(a: i32, b: i32) -> [f64; 3] {
    let d = f64::from(WEIGHT_DENOM);
    [
        f64::from(a) / d,
        f64::from(b) / d,
        f64::from(WEIGHT_DENOM - a - b) / d,
    ]
}

struct Candidate {
    a: i32,
    b: i32,
    variance: f64,
    table: CurveTable,
}

fn better(x: &Candidate, y: &Candidate) -> bool {
    match x.variance.total_cmp(&y.variance) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => (x.a, x.b) < (y.a, y.b),
    }
}

/// Fits the isotonic curve for fixed weights and returns it with its residual
/// variance. `pairs` must already be in canonical order.
fn fit_for_weights(pairs: &[([f64; 3], f64)], weights: [f64; 3], bins: usize) -> (CurveTable, f64) {
    let abscissa = |rgb: [f64; 3]| weights[0] * rgb[0] + weights[1] * rgb[1] + weights[2] * rgb[2];
    let mut count = vec![0usize; bins];
    let mut sum_s = vec![0.0; bins];
    let mut sum_g = vec![0.0; bins];
    for &(rgb, g) in pairs {
        let s = abscissa(rgb).clamp(0.0, 1.0);
        let b = ((s * bins as f64) as usize).min(bins - 1);
        count[b] += 1;
        sum_s[b] += s;
        sum_g[b] += g;
    }

    let filled: Vec<usize> = (0..bins).filter(|&b| count[b] > 0).collect();
    let means: Vec<f64> = filled.iter().map(|&b| sum_g[b] / count[b] as f64).collect();
    let wts: Vec<f64> = filled.iter().map(|&b| count[b] as f64).collect();
    let pooled = pool_adjacent_violators(&means, &wts);

    // empty bins add no breakpoint: the curve interpolates across them
    let mut xs: Vec<f64> = filled.iter().map(|&b| sum_s[b] / count[b] as f64).collect();
    let mut ys = pooled;

    // extend to [0, 1] along the boundary segments
    let n = xs.len();
    let first_slope = if n > 1 { (ys[1] - ys[0]) / (xs[1] - xs[0]) } else { 0.0 };
    let last_slope = if n > 1 {
        (ys[n - 1] - ys[n - 2]) / (xs[n - 1] - xs[n - 2])
    } else {
        0.0
    };
    if xs[0] > 0.0 {
        let y = (ys[0] - first_slope * xs[0]).clamp(0.0, ys[0]);
        xs.insert(0, 0.0);
        ys.insert(0, y);
    }
    let n = xs.len();
    if xs[n - 1] < 1.0 {
        let y = (ys[n - 1] + last_slope * (1.0 - xs[n - 1])).clamp(ys[n - 1], 1.0);
        xs.push(1.0);
        ys.push(y);
    }
    let table = CurveTable { xs, ys };

    let sse: f64 = pairs
        .iter()
        .map(|&(rgb, g)| {
            let r = g - table.eval(abscissa(rgb));
            r * r
        })
        .sum();
    (table, sse / pairs.len() as f64)
}

/// ESTIM: fits weights on the simplex and an isotonic curve minimizing the
/// residual variance of the gray ordinates.
///
/// Weights are searched on a 0.05 grid, then refined on a 1/60 grid within one
/// coarse step of the coarse optimum. Ties in variance go to the
/// lexicographically smallest `(α, β)`. The result does not depend on the
/// order of `pairs`.
pub fn estimate(pairs: &[([f64; 3], f64)], bins: usize) -> Result<FitReport> {
    const MIN_PAIRS: usize = 8;
    if bins == 0 {
        return Err(TinctError::InvalidParameter("bins must be positive".into()));
    }
    if pairs.len() < MIN_PAIRS {
        return Err(TinctError::InsufficientData {
            needed: MIN_PAIRS,
            got: pairs.len(),
        });
    }
    for &(rgb, g) in pairs {
        if let Some(&v) = rgb.iter().chain([&g]).find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(TinctError::OutOfRange {
                value: v,
                lo: 0.0,
                hi: 1.0,
            });
        }
    }
    if pairs.iter().all(|p| p.0 == pairs[0].0) {
        return Err(TinctError::DegenerateData);
    }

    let mut sorted = pairs.to_vec();
    sorted.sort_by(|p, q| {
        p.0[0]
            .total_cmp(&q.0[0])
            .then(p.0[1].total_cmp(&q.0[1]))
            .then(p.0[2].total_cmp(&q.0[2]))
            .then(p.1.total_cmp(&q.1))
    });

    let evaluate = |grid: Vec<(i32, i32)>| -> Candidate {
        grid.into_par_iter()
            .map(|(a, b)| {
                let (table, variance) = fit_for_weights(&sorted, grid_weights(a, b), bins);
                Candidate {
                    a,
                    b,
                    variance,
                    table,
                }
            })
            .collect::<Vec<_>>()
            .into_iter()
            .reduce(|x, y| if better(&y, &x) { y } else { x })
            .expect("grid is non-empty")
    };

    let coarse: Vec<(i32, i32)> = (0..=WEIGHT_DENOM)
        .step_by(COARSE_STRIDE as usize)
        .flat_map(|a| {
            (0..=WEIGHT_DENOM - a)
                .step_by(COARSE_STRIDE as usize)
                .map(move |b| (a, b))
        })
        .collect();
    let best_coarse = evaluate(coarse);

    let (a0, b0) = (best_coarse.a, best_coarse.b);
    let c0 = WEIGHT_DENOM - a0 - b0;
    let mut fine = Vec::new();
    for a in (a0 - COARSE_STRIDE).max(0)..=(a0 + COARSE_STRIDE).min(WEIGHT_DENOM) {
        for b in (b0 - COARSE_STRIDE).max(0)..=(b0 + COARSE_STRIDE).min(WEIGHT_DENOM - a) {
            let c = WEIGHT_DENOM - a - b;
            if (c - c0).abs() <= COARSE_STRIDE && (a, b) != (a0, b0) {
                fine.push((a, b));
            }
        }
    }
    let best = if fine.is_empty() {
        best_coarse
    } else {
        let best_fine = evaluate(fine);
        if better(&best_fine, &best_coarse) {
            best_fine
        } else {
            best_coarse
        }
    };

    Ok(FitReport {
        projection: NonlinearProjection::new(
            grid_weights(best.a, best.b),
            Curve::Table(best.table),
        )?,
        variance: best.variance,
        sample_count: pairs.len(),
    })
}
