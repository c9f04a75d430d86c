//! Iterative color extension over the Voronoi decomposition of the known
//! pixels, accepted only where the projected color matches the gray datum.

use rayon::prelude::*;

use crate::error::{Result, TinctError};
use crate::image::{ColorImage, ObservedScene, PixelMask, PixelState};
use crate::projection::{estimate, FitReport, NonlinearProjection, DEFAULT_BINS};

const NO_NODE: u32 = u32::MAX;

/// Nearest known-color node of every pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoronoiLabels {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    /// `(x, y)` of every node, in row-major order.
    nodes: Vec<(usize, usize)>,
}

impl VoronoiLabels {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, x: usize, y: usize) -> usize {
        self.labels[y * self.width + x] as usize
    }

    pub fn nodes(&self) -> &[(usize, usize)] {
        &self.nodes
    }

    /// Row-major pixel index of the node labelling pixel `idx`.
    pub fn node_pixel(&self, idx: usize) -> usize {
        let (x, y) = self.nodes[self.labels[idx] as usize];
        y * self.width + x
    }
}

/// Exact nearest-node labelling under squared Euclidean distance; ties go to
/// the node with the smallest row-major index.
///
/// Runs in two passes: the nearest node within each column, then for each
/// pixel an outward scan over columns that stops once the horizontal offset
/// alone exceeds the best distance found.
pub fn voronoi_assign(mask: &PixelMask) -> Result<VoronoiLabels> {
    let (w, h) = (mask.width(), mask.height());
    let mut node_id = vec![NO_NODE; w * h];
    let mut nodes = Vec::new();
    for (i, &s) in mask.states().iter().enumerate() {
        if s == PixelState::KnownColor {
            node_id[i] = nodes.len() as u32;
            nodes.push((i % w, i / w));
        }
    }
    if nodes.is_empty() {
        return Err(TinctError::NoSeeds);
    }

    // column pass: col_row[x * h + y] is the row of the nearest node in column x
    let mut col_row = vec![NO_NODE; w * h];
    col_row.par_chunks_mut(h).enumerate().for_each(|(x, rows)| {
        let is_node = |y: usize| node_id[y * w + x] != NO_NODE;
        let mut above = vec![NO_NODE; h];
        let mut last = NO_NODE;
        for (y, slot) in above.iter_mut().enumerate() {
            if is_node(y) {
                last = y as u32;
            }
            *slot = last;
        }
        let mut below = NO_NODE;
        for y in (0..h).rev() {
            if is_node(y) {
                below = y as u32;
            }
            rows[y] = match (above[y], below) {
                (NO_NODE, b) => b,
                (a, NO_NODE) => a,
                // equal distance resolves upward: smaller row, smaller index
                (a, b) => {
                    if y as u32 - a <= b - y as u32 {
                        a
                    } else {
                        b
                    }
                }
            };
        }
    });

    let mut labels = vec![0u32; w * h];
    labels.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, slot) in row.iter_mut().enumerate() {
            let mut best: Option<(u64, u32)> = None;
            for d in 0..w {
                let dd = (d * d) as u64;
                if matches!(best, Some((bd, _)) if dd > bd) {
                    break;
                }
                let mut consider = |cx: usize| {
                    let r = col_row[cx * h + y];
                    if r == NO_NODE {
                        return;
                    }
                    let dy = (r as i64 - y as i64).unsigned_abs();
                    let cand = (dd + dy * dy, node_id[r as usize * w + cx]);
                    if best.is_none_or(|b| cand < b) {
                        best = Some(cand);
                    }
                };
                if x >= d {
                    consider(x - d);
                }
                if d > 0 && x + d < w {
                    consider(x + d);
                }
            }
            *slot = best.expect("at least one node exists").1;
        }
    });

    Ok(VoronoiLabels {
        width: w,
        height: h,
        labels,
        nodes,
    })
}

/// EXTEND: paints every pixel with the color of its Voronoi node.
pub fn extend(scene: &ObservedScene, labels: &VoronoiLabels) -> ColorImage {
    assert_eq!(
        (labels.width(), labels.height()),
        (scene.width(), scene.height()),
        "labels do not match the scene"
    );
    let color = scene.color();
    let planes: [Vec<f64>; 3] = std::array::from_fn(|k| {
        let src = color.plane(k);
        (0..scene.len())
            .into_par_iter()
            .map(|i| src[labels.node_pixel(i)])
            .collect()
    });
    ColorImage::from_planes(scene.width(), scene.height(), planes)
        .expect("values copied from a valid image")
}

/// THRS: keeps known-color pixels and promotes gray-only pixels whose
/// candidate color projects within `eps` of the observed gray.
pub fn thrs(
    candidate: &ColorImage,
    scene: &ObservedScene,
    projection: &NonlinearProjection,
    eps: f64,
) -> PixelMask {
    assert!(
        candidate.same_shape(scene.width(), scene.height()),
        "candidate does not match the scene"
    );
    let mask = scene.mask();
    let gray = scene.gray();
    let states = (0..scene.len())
        .into_par_iter()
        .map(|i| match mask.at(i) {
            PixelState::GrayOnly
                if (projection.apply(candidate.at(i)) - gray.at(i)).abs() <= eps =>
            {
                PixelState::KnownColor
            }
            s => s,
        })
        .collect();
    PixelMask::from_states(scene.width(), scene.height(), states).expect("same shape")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestoreParams {
    /// `c` in `ε = c · σ`.
    pub threshold_scale: f64,
    /// Lower bound on `ε`, so a noiseless fit (`σ = 0`) still accepts exact
    /// matches up to rounding or quantization.
    pub min_threshold: f64,
    pub estim_bins: usize,
    pub max_outer_iters: usize,
    /// Keep every earlier promotion (monotone accepted set). When false,
    /// promoted pixels are re-tested against each new threshold; only the
    /// original fragments are permanent.
    pub retain_promotions: bool,
}

impl Default for RestoreParams {
    fn default() -> Self {
        Self {
            threshold_scale: 2.0,
            min_threshold: 1e-6,
            estim_bins: DEFAULT_BINS,
            max_outer_iters: 10_000,
            retain_promotions: true,
        }
    }
}

impl RestoreParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold_scale > 0.0) {
            return Err(TinctError::InvalidParameter(
                "threshold scale must be positive".into(),
            ));
        }
        if !(self.min_threshold >= 0.0) {
            return Err(TinctError::InvalidParameter(
                "minimum threshold must be non-negative".into(),
            ));
        }
        if self.max_outer_iters == 0 {
            return Err(TinctError::InvalidParameter(
                "at least one outer iteration is required".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RestoreOutcome {
    /// Accepted colors; zero outside the accepted set.
    pub colors: ColorImage,
    pub mask: PixelMask,
    /// Fit used by the last iteration.
    pub fit: FitReport,
    pub iterations: usize,
    pub cap_reached: bool,
    /// Known-color count after each iteration.
    pub accepted_history: Vec<usize>,
    pub thresholds: Vec<f64>,
}

impl RestoreOutcome {
    pub fn scene(&self, gray: &crate::image::GrayImage) -> Result<ObservedScene> {
        ObservedScene::new(self.colors.clone(), gray.clone(), self.mask.clone())
    }
}

/// Known-color pixels that also carry a gray value, as ESTIM input.
pub fn estimation_pairs(scene: &ObservedScene) -> Vec<([f64; 3], f64)> {
    (0..scene.len())
        .filter(|&i| scene.mask().at(i) == PixelState::KnownColor)
        .map(|i| (scene.color().at(i), scene.gray().at(i)))
        .collect()
}

fn zero_unknown(color: &ColorImage, mask: &PixelMask) -> ColorImage {
    let planes: [Vec<f64>; 3] = std::array::from_fn(|k| {
        color
            .plane(k)
            .iter()
            .zip(mask.states())
            .map(|(&v, &s)| if s == PixelState::KnownColor { v } else { 0.0 })
            .collect()
    });
    ColorImage::from_planes(color.width(), color.height(), planes).expect("valid values")
}

/// RESTORE: repeats ESTIM, EXTEND and THRS until the accepted set and its
/// colors stop changing, or `max_outer_iters` is hit.
pub fn restore(scene: &ObservedScene, params: &RestoreParams) -> Result<RestoreOutcome> {
    restore_observed(scene, params, |_, _| Ok(()))
}

/// [`restore`] with a callback receiving `(iteration, mask)` after each pass.
pub fn restore_observed(
    scene: &ObservedScene,
    params: &RestoreParams,
    mut on_iteration: impl FnMut(usize, &PixelMask) -> Result<()>,
) -> Result<RestoreOutcome> {
    params.validate()?;
    let gray = scene.gray().clone();
    let mut state = ObservedScene::new(
        zero_unknown(scene.color(), scene.mask()),
        gray.clone(),
        scene.mask().clone(),
    )?;

    let mut accepted_history = Vec::new();
    let mut thresholds = Vec::new();
    let mut fit = None;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_outer_iters {
        iterations += 1;
        let report = estimate(&estimation_pairs(&state), params.estim_bins)?;
        let eps = (params.threshold_scale * report.variance.sqrt()).max(params.min_threshold);

        let labels = voronoi_assign(state.mask())?;
        let candidate = extend(&state, &labels);
        let base = if params.retain_promotions { &state } else { scene };
        let mask = thrs(&candidate, base, &report.projection, eps);
        let colors = zero_unknown(&candidate, &mask);

        let unchanged = &mask == state.mask() && &colors == state.color();
        accepted_history.push(mask.count(PixelState::KnownColor));
        thresholds.push(eps);
        on_iteration(iterations, &mask)?;
        state = ObservedScene::new(colors, gray.clone(), mask)?;
        fit = Some(report);
        if unchanged {
            converged = true;
            break;
        }
    }

    let (colors, _, mask) = state.into_parts();
    Ok(RestoreOutcome {
        colors,
        mask,
        fit: fit.expect("at least one iteration ran"),
        iterations,
        cap_reached: !converged,
        accepted_history,
        thresholds,
    })
}
