//! Explicit-Euler steepest descent for a 1D signal known exactly on part of
//! its domain and only through a scalar distortion `L` elsewhere.
//!
//! Grid spacing is 1, so `mu` and `lambda` are mesh-dependent weights.

use crate::error::{Result, TinctError};
use crate::projection::Curve;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// Sample is the true value.
    Known,
    /// Sample is `L(true value)`.
    Distorted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signal1D {
    samples: Vec<f64>,
    region: Vec<Region>,
}

impl Signal1D {
    pub fn new(samples: Vec<f64>, region: Vec<Region>) -> Result<Self> {
        if samples.len() != region.len() {
            return Err(TinctError::InvalidParameter(format!(
                "{} samples but {} region tags",
                samples.len(),
                region.len()
            )));
        }
        if samples.len() < 3 {
            return Err(TinctError::InvalidParameter(
                "a signal needs at least 3 samples".into(),
            ));
        }
        if !region.contains(&Region::Known) {
            return Err(TinctError::InvalidParameter(
                "a signal needs at least one known sample".into(),
            ));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(TinctError::InvalidParameter("non-finite sample".into()));
        }
        Ok(Self { samples, region })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn region(&self) -> &[Region] {
        &self.region
    }

    /// Initial guess: known samples as-is, distorted runs replaced by the
    /// straight line between the neighbouring known samples (held constant
    /// past the first/last known sample).
    pub fn linear_gap_fill(&self) -> Vec<f64> {
        let known: Vec<usize> = (0..self.len())
            .filter(|&i| self.region[i] == Region::Known)
            .collect();
        (0..self.len())
            .map(|i| {
                if self.region[i] == Region::Known {
                    return self.samples[i];
                }
                let right = known.partition_point(|&k| k < i);
                match (right.checked_sub(1).map(|l| known[l]), known.get(right)) {
                    (Some(l), Some(&r)) => {
                        let t = (i - l) as f64 / (r - l) as f64;
                        (1.0 - t) * self.samples[l] + t * self.samples[r]
                    }
                    (Some(l), None) => self.samples[l],
                    (None, Some(&r)) => self.samples[r],
                    (None, None) => unreachable!("signal has a known sample"),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Descent1DConfig {
    pub mu: f64,
    pub lambda: f64,
    pub dt: f64,
    pub eps_stop: f64,
    pub max_iters: usize,
    /// Abort once any sample exceeds this magnitude.
    pub divergence_bound: f64,
}

impl Default for Descent1DConfig {
    fn default() -> Self {
        Self {
            mu: 10.0,
            lambda: 10.0,
            dt: 0.1,
            eps_stop: 1e-6,
            max_iters: 10_000,
            divergence_bound: 10.0,
        }
    }
}

impl Descent1DConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0 && self.lambda >= 0.0) {
            return Err(TinctError::InvalidParameter(
                "mu and lambda must be non-negative".into(),
            ));
        }
        if !(self.dt > 0.0) || !(self.eps_stop > 0.0) {
            return Err(TinctError::InvalidParameter(
                "dt and eps_stop must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// `v(i-1) - 2 v(i) + v(i+1)`. Panics unless `1 <= i <= len - 2`.
pub fn laplacian1d(v: &[f64], i: usize) -> f64 {
    assert!(
        i >= 1 && i + 1 < v.len(),
        "index {i} is not interior for length {}",
        v.len()
    );
    v[i - 1] - 2.0 * v[i] + v[i + 1]
}

/// Negative gradient of the discrete energy at interior sample `i`:
/// second difference, minus `2μ(v - ū)` on known samples, minus
/// `2λ(L(v) - ū) L'(v)` on distorted ones.
pub fn residual1d(
    curve: &Curve,
    v: &[f64],
    signal: &Signal1D,
    cfg: &Descent1DConfig,
    i: usize,
) -> f64 {
    let lap = laplacian1d(v, i);
    let obs = signal.samples[i];
    match signal.region[i] {
        Region::Known => lap - 2.0 * cfg.mu * (v[i] - obs),
        Region::Distorted => {
            lap - 2.0 * cfg.lambda * (curve.eval(v[i]) - obs) * curve.derivative(v[i])
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Descent1DOutcome {
    pub values: Vec<f64>,
    /// Sweeps performed.
    pub iterations: usize,
    pub converged: bool,
    /// Max interior |residual| before each sweep, plus the final check.
    pub trace: Vec<f64>,
}

/// Jacobi sweeps `v = v̄ + Δt · residual(v̄)` on interior samples until the
/// max residual drops to `eps_stop` or `max_iters` sweeps ran. The two end
/// samples keep their initial values.
pub fn steep_desc(
    curve: &Curve,
    signal: &Signal1D,
    v0: &[f64],
    cfg: &Descent1DConfig,
) -> Result<Descent1DOutcome> {
    steep_desc_observed(curve, signal, v0, cfg, |_, _| {})
}

/// [`steep_desc`] with a callback receiving `(sweep, values)` after each sweep.
pub fn steep_desc_observed(
    curve: &Curve,
    signal: &Signal1D,
    v0: &[f64],
    cfg: &Descent1DConfig,
    mut on_sweep: impl FnMut(usize, &[f64]),
) -> Result<Descent1DOutcome> {
    cfg.validate()?;
    if v0.len() != signal.len() {
        return Err(TinctError::InvalidParameter(format!(
            "initial guess has length {}, signal has {}",
            v0.len(),
            signal.len()
        )));
    }
    let n = v0.len();
    let mut prev = v0.to_vec();
    let mut next = prev.clone();
    let mut residual = vec![0.0; n];
    let mut trace = Vec::new();
    let mut iterations = 0;

    loop {
        let mut max_r: f64 = 0.0;
        for i in 1..n - 1 {
            residual[i] = residual1d(curve, &prev, signal, cfg, i);
            max_r = max_r.max(residual[i].abs());
        }
        trace.push(max_r);
        if max_r <= cfg.eps_stop {
            return Ok(Descent1DOutcome {
                values: prev,
                iterations,
                converged: true,
                trace,
            });
        }
        if iterations == cfg.max_iters {
            return Ok(Descent1DOutcome {
                values: prev,
                iterations,
                converged: false,
                trace,
            });
        }
        iterations += 1;
        for i in 1..n - 1 {
            let v = prev[i] + cfg.dt * residual[i];
            if !v.is_finite() || v.abs() > cfg.divergence_bound {
                return Err(TinctError::Divergence {
                    iteration: iterations,
                });
            }
            next[i] = v;
        }
        std::mem::swap(&mut prev, &mut next);
        on_sweep(iterations, &prev);
    }
}
