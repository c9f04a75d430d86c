//! Interpolation followed by variational inpainting, plus the synthetic
//! inputs and quality metrics used to evaluate it.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::descent2d::{steep_desc_2d_observed, Descent2DConfig, Descent2DOutcome};
use crate::error::{Result, TinctError};
use crate::image::{ColorImage, GrayImage, ObservedScene, PixelMask, PixelState};
use crate::projection::{estimate, FitReport, NonlinearProjection};
use crate::voronoi::{estimation_pairs, restore_observed, RestoreParams};

/// Builds an observation from a ground-truth image: colors on known pixels,
/// `L(truth)` (clamped to `[0, 1]`) wherever gray data exists.
pub fn distort(
    truth: &ColorImage,
    mask: &PixelMask,
    projection: &NonlinearProjection,
) -> Result<ObservedScene> {
    let (w, h) = (mask.width(), mask.height());
    if !truth.same_shape(w, h) {
        return Err(TinctError::ShapeMismatch(format!(
            "truth {}x{}, mask {w}x{h}",
            truth.width(),
            truth.height()
        )));
    }
    let mut color = ColorImage::new(w, h)?;
    let mut gray = GrayImage::new(w, h)?;
    for idx in 0..w * h {
        let state = mask.at(idx);
        if state == PixelState::KnownColor {
            color.set_at(idx, truth.at(idx))?;
        }
        if state.has_gray() {
            gray.set_at(idx, projection.apply(truth.at(idx)).clamp(0.0, 1.0))?;
        }
    }
    ObservedScene::new(color, gray, mask.clone())
}

/// Known-color disks (squared distance `<= radius²`) around the given
/// centers, gray-only elsewhere.
pub fn disk_mask_with_centers(
    width: usize,
    height: usize,
    centers: &[(usize, usize)],
    radius: usize,
) -> Result<PixelMask> {
    if radius == 0 || 2 * radius > width.min(height) {
        return Err(TinctError::InvalidParameter(format!(
            "radius {radius} does not fit a {width}x{height} image"
        )));
    }
    let mut mask = PixelMask::filled(width, height, PixelState::GrayOnly)?;
    let r2 = (radius * radius) as i64;
    for &(cx, cy) in centers {
        let (x0, x1) = (cx.saturating_sub(radius), (cx + radius).min(width - 1));
        let (y0, y1) = (cy.saturating_sub(radius), (cy + radius).min(height - 1));
        for y in y0..=y1 {
            for x in x0..=x1 {
                let dx = x as i64 - cx as i64;
                let dy = y as i64 - cy as i64;
                if dx * dx + dy * dy <= r2 {
                    mask.set(x, y, PixelState::KnownColor);
                }
            }
        }
    }
    Ok(mask)
}

/// `disk_count` disks at seeded pseudorandom centers.
pub fn disk_mask(
    width: usize,
    height: usize,
    disk_count: usize,
    radius: usize,
    seed: u64,
) -> Result<PixelMask> {
    if disk_count == 0 {
        return Err(TinctError::InvalidParameter(
            "at least one disk is required".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<(usize, usize)> = (0..disk_count)
        .map(|_| (rng.random_range(0..width), rng.random_range(0..height)))
        .collect();
    disk_mask_with_centers(width, height, &centers, radius)
}

/// Test image: flat-luminance patches (a random Voronoi mosaic) carrying a
/// slowly rotating zero-sum chroma, so `(r + g + b) / 3` is constant on each
/// patch while the color varies smoothly across patch borders.
pub fn synthetic_truth(width: usize, height: usize, patches: usize, seed: u64) -> Result<ColorImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sites: Vec<(f64, f64, f64)> = (0..patches.max(1))
        .map(|_| {
            (
                rng.random_range(0.0..width as f64),
                rng.random_range(0.0..height as f64),
                rng.random_range(0.3..0.7),
            )
        })
        .collect();
    let phase = rng.random_range(0.0..2.0 * PI);
    let fx = rng.random_range(0.4..1.0);
    let fy = rng.random_range(0.2..0.6);
    let amp = 0.2;
    ColorImage::from_fn(width, height, |x, y| {
        let (px, py) = (x as f64, y as f64);
        let lum = sites
            .iter()
            .min_by(|a, b| {
                let da = (a.0 - px).powi(2) + (a.1 - py).powi(2);
                let db = (b.0 - px).powi(2) + (b.1 - py).powi(2);
                da.total_cmp(&db)
            })
            .map(|s| s.2)
            .expect("at least one site");
        let theta = phase + 2.0 * PI * (fx * px / width as f64 + fy * py / height as f64);
        std::array::from_fn(|k| lum + amp * (theta + 2.0 * PI * k as f64 / 3.0).sin())
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionMetrics {
    pub pixels: usize,
    pub rmse: f64,
    /// `None` when the region is reproduced exactly.
    pub psnr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    /// `20 log10(1 / rmse)`; `None` when `rmse == 0` (exact).
    pub psnr: Option<f64>,
    pub rmse: f64,
    pub rmse_channels: [f64; 3],
    pub known: Option<RegionMetrics>,
    pub gray_only: Option<RegionMetrics>,
    pub unknown: Option<RegionMetrics>,
}

impl QualityReport {
    pub fn is_exact(&self) -> bool {
        self.psnr.is_none()
    }

    /// PSNR with exact reproduction mapped to `+inf`.
    pub fn psnr_db(&self) -> f64 {
        self.psnr.unwrap_or(f64::INFINITY)
    }
}

pub fn psnr_from_rmse(rmse: f64) -> Option<f64> {
    (rmse > 0.0).then(|| 20.0 * (1.0 / rmse).log10())
}

fn region(result: &ColorImage, truth: &ColorImage, pixels: &[usize]) -> Option<RegionMetrics> {
    if pixels.is_empty() {
        return None;
    }
    let sse: f64 = pixels
        .iter()
        .map(|&i| {
            let (a, b) = (result.at(i), truth.at(i));
            (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>()
        })
        .sum();
    let rmse = (sse / (3 * pixels.len()) as f64).sqrt();
    Some(RegionMetrics {
        pixels: pixels.len(),
        rmse,
        psnr: psnr_from_rmse(rmse),
    })
}

/// RMSE and PSNR against `truth`, overall and per mask state.
pub fn quality(result: &ColorImage, truth: &ColorImage, mask: &PixelMask) -> Result<QualityReport> {
    let (w, h) = (truth.width(), truth.height());
    if !result.same_shape(w, h) || mask.width() != w || mask.height() != h {
        return Err(TinctError::ShapeMismatch(
            "result, truth and mask must share dimensions".into(),
        ));
    }
    let n = (w * h) as f64;
    let rmse_channels: [f64; 3] = std::array::from_fn(|k| {
        let sse: f64 = result
            .plane(k)
            .iter()
            .zip(truth.plane(k))
            .map(|(a, b)| (a - b).powi(2))
            .sum();
        (sse / n).sqrt()
    });
    let rmse = (rmse_channels.iter().map(|r| r * r).sum::<f64>() / 3.0).sqrt();
    let by_state = |s: PixelState| -> Vec<usize> {
        (0..w * h).filter(|&i| mask.at(i) == s).collect()
    };
    Ok(QualityReport {
        psnr: psnr_from_rmse(rmse),
        rmse,
        rmse_channels,
        known: region(result, truth, &by_state(PixelState::KnownColor)),
        gray_only: region(result, truth, &by_state(PixelState::GrayOnly)),
        unknown: region(result, truth, &by_state(PixelState::Unknown)),
    })
}

/// Value given to pixels with neither color nor gray data in the initial
/// guess.
pub const UNKNOWN_FILL: f64 = 0.5;

/// Accepted colors where known, the achromatic section of the gray value
/// where only gray is known.
pub fn initial_guess(
    colors: &ColorImage,
    mask: &PixelMask,
    gray: &GrayImage,
    projection: &NonlinearProjection,
) -> Result<ColorImage> {
    ColorImage::from_fn(mask.width(), mask.height(), |x, y| match mask.get(x, y) {
        PixelState::KnownColor => colors.get(x, y),
        PixelState::GrayOnly => projection.section_clamped(gray.get(x, y)),
        PixelState::Unknown => [UNKNOWN_FILL; 3],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Interpolation passes before the descent; 0 skips interpolation (the
    /// curve is still fitted once).
    pub interp_iters: usize,
    pub restore: RestoreParams,
    pub descent: Descent2DConfig,
    /// Emit a descent snapshot every this many sweeps; 0 disables.
    pub dump_every: usize,
    pub seed: u64,
    /// Drive the descent with this projection instead of the fitted one.
    pub projection_override: Option<NonlinearProjection>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            interp_iters: 3,
            restore: RestoreParams::default(),
            descent: Descent2DConfig::default(),
            dump_every: 0,
            seed: 0,
            projection_override: None,
        }
    }
}

/// Progress events emitted by [`run_combined_observed`].
#[derive(Debug)]
pub enum StageEvent<'a> {
    Interpolation { iteration: usize, mask: &'a PixelMask },
    Descent { sweep: usize, image: &'a ColorImage },
}

#[derive(Debug, Clone)]
pub struct CombinedOutcome {
    pub image: ColorImage,
    pub quality: Option<QualityReport>,
    /// Fit from the last interpolation pass (or the single initial fit).
    pub fit: FitReport,
    /// Scene handed to the descent: enlarged known set and its colors.
    pub descent_scene: ObservedScene,
    pub initial_guess: ColorImage,
    pub interp_iterations: usize,
    pub accepted_history: Vec<usize>,
    pub descent: Descent2DOutcome,
    /// PSNR after each sweep, when the truth was supplied.
    pub psnr_trace: Vec<f64>,
}

/// Interpolation stage alone: `iters` passes (or none), returning the
/// enlarged scene and the fit.
pub fn interpolation_stage(
    scene: &ObservedScene,
    restore: &RestoreParams,
    iters: usize,
    mut on_iteration: impl FnMut(usize, &PixelMask) -> Result<()>,
) -> Result<(ObservedScene, FitReport, usize, Vec<usize>)> {
    if iters == 0 {
        let fit = estimate(&estimation_pairs(scene), restore.estim_bins)?;
        let known = scene.mask().count(PixelState::KnownColor);
        return Ok((scene.clone(), fit, 0, vec![known]));
    }
    let params = RestoreParams {
        max_outer_iters: iters,
        ..restore.clone()
    };
    let out = restore_observed(scene, &params, &mut on_iteration)?;
    let enlarged = out.scene(scene.gray())?;
    Ok((enlarged, out.fit, out.iterations, out.accepted_history))
}

pub fn run_combined(
    scene: &ObservedScene,
    cfg: &PipelineConfig,
    truth: Option<&ColorImage>,
) -> Result<CombinedOutcome> {
    run_combined_observed(scene, cfg, truth, |_| Ok(()))
}

pub fn run_combined_observed(
    scene: &ObservedScene,
    cfg: &PipelineConfig,
    truth: Option<&ColorImage>,
    mut on_event: impl FnMut(StageEvent<'_>) -> Result<()>,
) -> Result<CombinedOutcome> {
    let (descent_scene, fit, interp_iterations, accepted_history) =
        interpolation_stage(scene, &cfg.restore, cfg.interp_iters, |iteration, mask| {
            on_event(StageEvent::Interpolation { iteration, mask })
        })?;
    let projection = cfg
        .projection_override
        .clone()
        .unwrap_or_else(|| fit.projection.clone());
    let u0 = initial_guess(
        descent_scene.color(),
        descent_scene.mask(),
        descent_scene.gray(),
        &projection,
    )?;

    let (w, h) = (scene.width(), scene.height());
    let mut psnr_trace = Vec::new();
    let descent = steep_desc_2d_observed(
        &projection,
        &descent_scene,
        &u0,
        &cfg.descent,
        |sweep, planes| {
            let want_dump = cfg.dump_every > 0 && sweep % cfg.dump_every == 0;
            if truth.is_none() && !want_dump {
                return Ok(());
            }
            let image = ColorImage::from_planes(w, h, planes.clone())?;
            if let Some(t) = truth {
                psnr_trace.push(quality(&image, t, scene.mask())?.psnr_db());
            }
            if want_dump {
                on_event(StageEvent::Descent {
                    sweep,
                    image: &image,
                })?;
            }
            Ok(())
        },
    )?;
    let quality = truth
        .map(|t| quality(&descent.image, t, scene.mask()))
        .transpose()?;

    Ok(CombinedOutcome {
        image: descent.image.clone(),
        quality,
        fit,
        descent_scene,
        initial_guess: u0,
        interp_iterations,
        accepted_history,
        descent,
        psnr_trace,
    })
}

/// Interpolation alone, run to its fixed point, with the section of the
/// gray value filling the pixels it could not color.
pub fn voronoi_only(scene: &ObservedScene, restore: &RestoreParams) -> Result<ColorImage> {
    let out = crate::voronoi::restore(scene, restore)?;
    initial_guess(&out.colors, &out.mask, scene.gray(), &out.fit.projection)
}
