//! Fixtures shared by the solver benchmarks.

use tinct::image::{ColorImage, ObservedScene};
use tinct::pipeline::{disk_mask, distort, initial_guess, synthetic_truth};
use tinct::projection::NonlinearProjection;

/// Disk-fragment scene on a synthetic mosaic, gray by the mean projection.
pub fn disk_scene(size: usize, disks: usize, seed: u64) -> (ObservedScene, ColorImage) {
    let truth = synthetic_truth(size, size, 12, seed).expect("valid size");
    let mask = disk_mask(size, size, disks, 3, seed + 100).expect("disks fit");
    let scene = distort(&truth, &mask, &NonlinearProjection::mean()).expect("shapes agree");
    (scene, truth)
}

/// Fragments plus the section of the gray value elsewhere.
pub fn start_image(scene: &ObservedScene) -> ColorImage {
    initial_guess(
        scene.color(),
        scene.mask(),
        scene.gray(),
        &NonlinearProjection::mean(),
    )
    .expect("shapes agree")
}

/// Deterministic smooth test signal of length `n`.
pub fn smooth_signal(n: usize) -> Vec<f64> {
    (0..n)
        .map(|t| {
            let x = t as f64 / n as f64;
            0.5 + 0.3 * (6.0 * std::f64::consts::PI * x).sin() + 0.1 * (22.0 * x).cos()
        })
        .collect()
}
