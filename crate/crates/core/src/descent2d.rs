//! Coupled three-channel steepest descent with curvature-driven smoothing and
//! a gray-fidelity coupling term.
//!
//! Each channel evolves by `∂v_k/∂t = lead_k - fidelity_k` where the leading
//! term is the discrete curvature `κ(v_k)` (optionally multiplied by
//! `|∇v_k|`, giving mean curvature motion) and the fidelity term pulls known
//! pixels toward their color and gray-only pixels toward `L(v) = gray`.
//!
//! Gradient magnitudes use central differences and need one pixel of margin;
//! the curvature stencil reads gradient magnitudes of the 4 neighbours and
//! needs two. Pixels in that 2-pixel frame are held at their initial values.

use rayon::prelude::*;

use crate::error::{Result, TinctError};
use crate::image::{ColorImage, ObservedScene, PixelState};
use crate::projection::NonlinearProjection;

/// Read-only view of one channel plane.
#[derive(Debug, Clone, Copy)]
pub struct Plane<'a> {
    data: &'a [f64],
    width: usize,
    height: usize,
}

impl<'a> Plane<'a> {
    pub fn new(data: &'a [f64], width: usize, height: usize) -> Self {
        assert_eq!(data.len(), width * height, "plane size mismatch");
        Self {
            data,
            width,
            height,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.width + i]
    }
}

#[inline]
fn grad_at(data: &[f64], w: usize, idx: usize, grad_eps: f64) -> f64 {
    let dx = (data[idx + 1] - data[idx - 1]) / 2.0;
    let dy = (data[idx + w] - data[idx - w]) / 2.0;
    (dx * dx + dy * dy + grad_eps * grad_eps).sqrt()
}

#[inline]
fn curvature_from(data: &[f64], grads: impl Fn(usize) -> f64, w: usize, idx: usize) -> f64 {
    let v = data[idx];
    let g = grads(idx);
    [idx - 1, idx + 1, idx - w, idx + w]
        .into_iter()
        .map(|n| 2.0 * (data[n] - v) / (g + grads(n)))
        .sum()
}

/// Regularized central-difference gradient magnitude at column `i`, row `j`.
/// Panics outside `1..=w-2 × 1..=h-2`.
pub fn grad_mag(plane: Plane<'_>, i: usize, j: usize, grad_eps: f64) -> f64 {
    assert!(
        i >= 1 && j >= 1 && i + 1 < plane.width && j + 1 < plane.height,
        "pixel ({i}, {j}) has no central-difference stencil"
    );
    grad_at(plane.data, plane.width, j * plane.width + i, grad_eps)
}

/// Discrete curvature over the 4-neighbourhood. Panics outside
/// `2..=w-3 × 2..=h-3`.
pub fn curvature(plane: Plane<'_>, i: usize, j: usize, grad_eps: f64) -> f64 {
    assert!(
        i >= 2 && j >= 2 && i + 2 < plane.width && j + 2 < plane.height,
        "pixel ({i}, {j}) is outside the curvature band"
    );
    let w = plane.width;
    curvature_from(
        plane.data,
        |n| grad_at(plane.data, w, n, grad_eps),
        w,
        j * w + i,
    )
}

pub fn in_band(width: usize, height: usize, i: usize, j: usize) -> bool {
    i >= 2 && j >= 2 && i + 2 < width && j + 2 < height
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOrder {
    /// Every update reads the previous sweep's snapshot.
    Jacobi,
    /// In-place updates in raster order; each pixel sees its predecessors'
    /// new values.
    GaussSeidel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Descent2DConfig {
    pub mu: f64,
    pub lambda: f64,
    pub dt: f64,
    pub eps_stop: f64,
    pub max_iters: usize,
    pub grad_eps: f64,
    /// Multiply the curvature by `|∇v_k|` (mean curvature motion).
    pub modified: bool,
    /// Reset known-color pixels to their observed color after every sweep.
    pub reimpose_known: bool,
    pub order: SweepOrder,
}

impl Default for Descent2DConfig {
    fn default() -> Self {
        Self {
            mu: 10.0,
            lambda: 10.0,
            dt: 0.1,
            eps_stop: 1e-6,
            max_iters: 300,
            grad_eps: 1e-4,
            modified: true,
            reimpose_known: true,
            order: SweepOrder::Jacobi,
        }
    }
}

impl Descent2DConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu >= 0.0 && self.lambda >= 0.0) {
            return Err(TinctError::InvalidParameter(
                "mu and lambda must be non-negative".into(),
            ));
        }
        if !(self.dt > 0.0) || !(self.grad_eps > 0.0) || !(self.eps_stop >= 0.0) {
            return Err(TinctError::InvalidParameter(
                "dt and grad_eps must be positive, eps_stop non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Iterate of the descent together with the data it is fitted to.
#[derive(Debug, Clone)]
pub struct WorkingState<'a> {
    planes: [Vec<f64>; 3],
    scene: &'a ObservedScene,
    iteration: usize,
}

impl<'a> WorkingState<'a> {
    pub fn new(scene: &'a ObservedScene, u0: &ColorImage) -> Result<Self> {
        if !u0.same_shape(scene.width(), scene.height()) {
            return Err(TinctError::ShapeMismatch(format!(
                "initial guess {}x{} for a {}x{} scene",
                u0.width(),
                u0.height(),
                scene.width(),
                scene.height()
            )));
        }
        Ok(Self {
            planes: u0.planes().clone(),
            scene,
            iteration: 0,
        })
    }

    pub fn planes(&self) -> &[Vec<f64>; 3] {
        &self.planes
    }

    pub fn plane(&self, k: usize) -> Plane<'_> {
        Plane::new(&self.planes[k], self.scene.width(), self.scene.height())
    }

    pub fn scene(&self) -> &ObservedScene {
        self.scene
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn pixel(&self, idx: usize) -> [f64; 3] {
        [self.planes[0][idx], self.planes[1][idx], self.planes[2][idx]]
    }
}

/// Fidelity part of the residual at pixel `idx`, channel `k`:
/// `-2μ(v_k - ū_k)` on known pixels, `-2λ(L(v) - ū) ∂L/∂x_k(v)` on gray-only
/// pixels, zero on unknown ones.
pub fn fidelity2d(
    projection: &NonlinearProjection,
    v: [f64; 3],
    scene: &ObservedScene,
    cfg: &Descent2DConfig,
    idx: usize,
    k: usize,
) -> f64 {
    match scene.mask().at(idx) {
        PixelState::KnownColor => -2.0 * cfg.mu * (v[k] - scene.color().plane(k)[idx]),
        PixelState::GrayOnly => {
            -2.0 * cfg.lambda
                * (projection.apply(v) - scene.gray().at(idx))
                * projection.channel_derivative(v, k)
        }
        PixelState::Unknown => 0.0,
    }
}

/// Full residual at column `i`, row `j`, channel `k` (0-based).
pub fn residual2d(
    projection: &NonlinearProjection,
    state: &WorkingState<'_>,
    cfg: &Descent2DConfig,
    i: usize,
    j: usize,
    k: usize,
) -> f64 {
    let plane = state.plane(k);
    let kappa = curvature(plane, i, j, cfg.grad_eps);
    let lead = if cfg.modified {
        grad_mag(plane, i, j, cfg.grad_eps) * kappa
    } else {
        kappa
    };
    let idx = j * state.scene.width() + i;
    lead + fidelity2d(projection, state.pixel(idx), state.scene, cfg, idx, k)
}

#[derive(Debug, Clone)]
pub struct Descent2DOutcome {
    pub image: ColorImage,
    pub iterations: usize,
    pub converged: bool,
    /// Max |residual| over evolving pixels before each sweep, plus the final
    /// check.
    pub trace: Vec<f64>,
    /// Updates that had to be clamped into `[0, 1]`.
    pub clamp_count: usize,
}

/// Explicit-Euler descent from `u0`.
pub fn steep_desc_2d(
    projection: &NonlinearProjection,
    scene: &ObservedScene,
    u0: &ColorImage,
    cfg: &Descent2DConfig,
) -> Result<Descent2DOutcome> {
    steep_desc_2d_observed(projection, scene, u0, cfg, |_, _| Ok(()))
}

/// [`steep_desc_2d`] with a callback receiving `(sweep, planes)` after each
/// sweep.
pub fn steep_desc_2d_observed(
    projection: &NonlinearProjection,
    scene: &ObservedScene,
    u0: &ColorImage,
    cfg: &Descent2DConfig,
    mut on_sweep: impl FnMut(usize, &[Vec<f64>; 3]) -> Result<()>,
) -> Result<Descent2DOutcome> {
    cfg.validate()?;
    let mut state = WorkingState::new(scene, u0)?;
    let (w, h) = (scene.width(), scene.height());
    let mask = scene.mask();
    if cfg.reimpose_known {
        for idx in 0..w * h {
            if mask.at(idx) == PixelState::KnownColor {
                for k in 0..3 {
                    state.planes[k][idx] = scene.color().plane(k)[idx];
                }
            }
        }
    }
    let evolves = |idx: usize| !(cfg.reimpose_known && mask.at(idx) == PixelState::KnownColor);

    let mut trace = Vec::new();
    let mut clamp_count = 0;
    let mut residual: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; w * h]);
    let mut grads: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; w * h]);

    loop {
        // residuals of the current iterate
        for k in 0..3 {
            fill_grads(&state.planes[k], &mut grads[k], w, h, cfg.grad_eps);
        }
        let max_r = {
            let planes = &state.planes;
            let grads = &grads;
            residual_rows(&mut residual, w, h, |idx, out| {
                let v = [planes[0][idx], planes[1][idx], planes[2][idx]];
                for k in 0..3 {
                    let g = &grads[k];
                    let kappa = curvature_from(&planes[k], |n| g[n], w, idx);
                    let lead = if cfg.modified { g[idx] * kappa } else { kappa };
                    out[k] = lead + fidelity2d(projection, v, scene, cfg, idx, k);
                }
            });
            let mut m: f64 = 0.0;
            for idx in band_indices(w, h) {
                if evolves(idx) {
                    for r in &residual {
                        m = m.max(r[idx].abs());
                    }
                }
            }
            m
        };
        if !max_r.is_finite() {
            return Err(TinctError::Divergence {
                iteration: state.iteration,
            });
        }
        trace.push(max_r);
        let converged = max_r <= cfg.eps_stop;
        if converged || state.iteration == cfg.max_iters {
            let image = ColorImage::from_planes(w, h, state.planes)?;
            return Ok(Descent2DOutcome {
                image,
                iterations: state.iteration,
                converged,
                trace,
                clamp_count,
            });
        }

        state.iteration += 1;
        match cfg.order {
            SweepOrder::Jacobi => {
                for idx in band_indices(w, h) {
                    if !evolves(idx) {
                        continue;
                    }
                    for k in 0..3 {
                        let v = state.planes[k][idx] + cfg.dt * residual[k][idx];
                        if !v.is_finite() {
                            return Err(TinctError::Divergence {
                                iteration: state.iteration,
                            });
                        }
                        if !(0.0..=1.0).contains(&v) {
                            clamp_count += 1;
                        }
                        state.planes[k][idx] = v.clamp(0.0, 1.0);
                    }
                }
            }
            SweepOrder::GaussSeidel => {
                for idx in band_indices(w, h) {
                    if !evolves(idx) {
                        continue;
                    }
                    let (i, j) = (idx % w, idx / w);
                    let r: [f64; 3] =
                        std::array::from_fn(|k| residual2d(projection, &state, cfg, i, j, k));
                    for k in 0..3 {
                        let v = state.planes[k][idx] + cfg.dt * r[k];
                        if !v.is_finite() {
                            return Err(TinctError::Divergence {
                                iteration: state.iteration,
                            });
                        }
                        if !(0.0..=1.0).contains(&v) {
                            clamp_count += 1;
                        }
                        state.planes[k][idx] = v.clamp(0.0, 1.0);
                    }
                }
            }
        }
        on_sweep(state.iteration, &state.planes)?;
    }
}

fn band_indices(w: usize, h: usize) -> impl Iterator<Item = usize> {
    (2..h.saturating_sub(2)).flat_map(move |j| (2..w.saturating_sub(2)).map(move |i| j * w + i))
}

fn fill_grads(plane: &[f64], out: &mut [f64], w: usize, h: usize, grad_eps: f64) {
    out.par_chunks_mut(w).enumerate().for_each(|(j, row)| {
        if j == 0 || j + 1 >= h {
            return;
        }
        for (i, g) in row.iter_mut().enumerate().take(w - 1).skip(1) {
            *g = grad_at(plane, w, j * w + i, grad_eps);
        }
    });
}

/// Evaluates `f(idx, &mut [r0, r1, r2])` on every band pixel, row-parallel,
/// writing into the three residual planes.
fn residual_rows(
    residual: &mut [Vec<f64>; 3],
    w: usize,
    h: usize,
    f: impl Fn(usize, &mut [f64; 3]) + Sync,
) {
    if w < 5 || h < 5 {
        return;
    }
    let rows: Vec<Vec<[f64; 3]>> = (2..h - 2)
        .into_par_iter()
        .map(|j| {
            (2..w - 2)
                .map(|i| {
                    let mut out = [0.0; 3];
                    f(j * w + i, &mut out);
                    out
                })
                .collect()
        })
        .collect();
    for (row, j) in rows.into_iter().zip(2..h - 2) {
        for (out, i) in row.into_iter().zip(2..w - 2) {
            for k in 0..3 {
                residual[k][j * w + i] = out[k];
            }
        }
    }
}
