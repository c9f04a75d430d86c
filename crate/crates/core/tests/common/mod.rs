//! Independent reference implementations and scene builders shared by the
//! integration tests. Nothing here calls into the code under test except to
//! construct inputs.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tinct::descent1d::{Region, Signal1D};
use tinct::gabor::GaborFrame;
use tinct::image::{ColorImage, GrayImage, ObservedScene, PixelMask, PixelState};
use tinct::pipeline::{disk_mask, distort, synthetic_truth};
use tinct::projection::{Curve, NonlinearProjection};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Nearest known pixel for every pixel by scanning all of them; ties keep
/// the first in row-major order. Returns pixel indices of the nodes.
pub fn brute_voronoi(mask: &PixelMask) -> Vec<usize> {
    let w = mask.width();
    let nodes: Vec<usize> = (0..w * mask.height())
        .filter(|&i| mask.at(i) == PixelState::KnownColor)
        .collect();
    (0..w * mask.height())
        .map(|p| {
            let (px, py) = ((p % w) as i64, (p / w) as i64);
            let mut best = (i64::MAX, usize::MAX);
            for &n in &nodes {
                let (nx, ny) = ((n % w) as i64, (n / w) as i64);
                let d = (px - nx).pow(2) + (py - ny).pow(2);
                if d < best.0 {
                    best = (d, n);
                }
            }
            best.1
        })
        .collect()
}

/// Direct triple-loop transform: `c(k, m) = Σ_t f(t) g(t - k a) e^{-2πimt/M}`.
pub fn naive_stft(frame: &GaborFrame, f: &[Complex64]) -> Vec<Complex64> {
    let n = frame.len();
    let (a, m_count) = (frame.hop(), frame.bins());
    let g = frame.window();
    let mut out = Vec::with_capacity(frame.time_shifts() * m_count);
    for k in 0..n / a {
        for m in 0..m_count {
            let mut acc = Complex64::new(0.0, 0.0);
            for (t, &ft) in f.iter().enumerate() {
                let gt = g[(t + n - (k * a) % n) % n];
                let phase = -2.0 * std::f64::consts::PI * (m * t) as f64 / m_count as f64;
                acc += ft * gt * Complex64::from_polar(1.0, phase);
            }
            out.push(acc);
        }
    }
    out
}

pub fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

pub fn l2_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// `½ Σ (v(i+1) - v(i))² + μ Σ_known (v - ū)² + λ Σ_distorted (L(v) - ū)²`.
pub fn energy1d(curve: &Curve, v: &[f64], s: &Signal1D, mu: f64, lambda: f64) -> f64 {
    let smooth: f64 = v.windows(2).map(|p| 0.5 * (p[1] - p[0]).powi(2)).sum();
    let fid: f64 = (0..v.len())
        .map(|i| {
            let u = s.samples()[i];
            match s.region()[i] {
                Region::Known => mu * (v[i] - u).powi(2),
                Region::Distorted => lambda * (curve.eval(v[i]) - u).powi(2),
            }
        })
        .sum();
    smooth + fid
}

/// Five-point central difference of `f` at `x` along coordinate `i`.
pub fn fd5(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut y = x.to_vec();
    let mut at = |d: f64| {
        y[i] = x[i] + d;
        f(&y)
    };
    let (p1, m1, p2, m2) = (at(h), at(-h), at(2.0 * h), at(-2.0 * h));
    (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h)
}

/// `μ Σ_known |v - ū|² + λ Σ_gray (L(v) - ū)²` over planes `v`.
pub fn fidelity_energy(
    p: &NonlinearProjection,
    planes: &[Vec<f64>; 3],
    scene: &ObservedScene,
    mu: f64,
    lambda: f64,
) -> f64 {
    (0..scene.len())
        .map(|i| {
            let v = [planes[0][i], planes[1][i], planes[2][i]];
            match scene.mask().at(i) {
                PixelState::KnownColor => {
                    let u = scene.color().at(i);
                    mu * (0..3).map(|k| (v[k] - u[k]).powi(2)).sum::<f64>()
                }
                PixelState::GrayOnly => lambda * (p.apply(v) - scene.gray().at(i)).powi(2),
                PixelState::Unknown => 0.0,
            }
        })
        .sum()
}

/// Central-difference gradient magnitude read off a row-major grid `v[j][i]`.
pub fn grad_transcribed(v: &[Vec<f64>], i: usize, j: usize, eps: f64) -> f64 {
    let dx = (v[j][i + 1] - v[j][i - 1]) / 2.0;
    let dy = (v[j + 1][i] - v[j - 1][i]) / 2.0;
    (dx * dx + dy * dy + eps * eps).sqrt()
}

/// `Σ_{n ∈ N4} 2 (v(n) - v) / (|∇v| + |∇v(n)|)`, neighbours left, right, up, down.
pub fn curvature_transcribed(v: &[Vec<f64>], i: usize, j: usize, eps: f64) -> f64 {
    let g = grad_transcribed(v, i, j, eps);
    let mut sum = 0.0;
    for (m, n) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
        sum += 2.0 * (v[n][m] - v[j][i]) / (g + grad_transcribed(v, m, n, eps));
    }
    sum
}

pub fn to_grid(plane: &[f64], w: usize) -> Vec<Vec<f64>> {
    plane.chunks(w).map(|r| r.to_vec()).collect()
}

/// Per-channel mean squared errors first, then the aggregate.
pub fn two_pass_rmse(a: &ColorImage, b: &ColorImage) -> ([f64; 3], f64) {
    let mut mse = [0.0; 3];
    for (k, m) in mse.iter_mut().enumerate() {
        let mut acc = 0.0;
        for idx in 0..a.len() {
            acc += (a.at(idx)[k] - b.at(idx)[k]).powi(2);
        }
        *m = acc / a.len() as f64;
    }
    let channels = [mse[0].sqrt(), mse[1].sqrt(), mse[2].sqrt()];
    (channels, ((mse[0] + mse[1] + mse[2]) / 3.0).sqrt())
}

pub fn random_mask(rng: &mut ChaCha8Rng, w: usize, h: usize, p_known: f64, p_unknown: f64) -> PixelMask {
    let states = (0..w * h)
        .map(|_| {
            let r: f64 = rng.random();
            if r < p_known {
                PixelState::KnownColor
            } else if r < p_known + p_unknown {
                PixelState::Unknown
            } else {
                PixelState::GrayOnly
            }
        })
        .collect();
    PixelMask::from_states(w, h, states).unwrap()
}

pub fn random_color(rng: &mut ChaCha8Rng, w: usize, h: usize) -> ColorImage {
    ColorImage::from_fn(w, h, |_, _| std::array::from_fn(|_| rng.random())).unwrap()
}

/// Random scene with independent colors and gray values.
pub fn random_scene(rng: &mut ChaCha8Rng, w: usize, h: usize) -> ObservedScene {
    let mask = random_mask(rng, w, h, 0.3, 0.1);
    let color = random_color(rng, w, h);
    let gray = GrayImage::from_vec(w, h, (0..w * h).map(|_| rng.random()).collect()).unwrap();
    ObservedScene::new(color, gray, mask).unwrap()
}

/// Disk fragments on the patch-and-chroma test image, gray from the mean.
pub fn disk_scene(
    size: usize,
    patches: usize,
    disks: usize,
    radius: usize,
    seed: u64,
) -> (ObservedScene, ColorImage) {
    let truth = synthetic_truth(size, size, patches, seed).unwrap();
    let mask = disk_mask(size, size, disks, radius, seed + 100).unwrap();
    let scene = distort(&truth, &mask, &NonlinearProjection::mean()).unwrap();
    (scene, truth)
}

/// Same affine ramp in every channel (straight isophotes), known on disks.
pub fn ramp_scene(size: usize, seed: u64) -> (ObservedScene, ColorImage) {
    let denom = 1.5 * size as f64;
    let truth = ColorImage::from_fn(size, size, |x, y| {
        [0.2 + 0.6 * (x as f64 + 0.5 * y as f64) / denom; 3]
    })
    .unwrap();
    let mask = disk_mask(size, size, 6, 4, seed).unwrap();
    let scene = distort(&truth, &mask, &NonlinearProjection::mean()).unwrap();
    (scene, truth)
}

/// Smooth signal on the increasing branch of the quartic, with a centered
/// distorted gap. Returns the signal and the truth.
pub fn gap_signal(n: usize, gap: usize) -> (Signal1D, Vec<f64>) {
    let truth: Vec<f64> = (0..n)
        .map(|i| {
            let t = i as f64 / (n - 1) as f64;
            0.75 + 0.12 * (2.0 * std::f64::consts::PI * 1.5 * t).sin()
                + 0.05 * (2.0 * std::f64::consts::PI * 4.0 * t).cos()
        })
        .collect();
    let lo = (n - gap) / 2;
    let region: Vec<Region> = (0..n)
        .map(|i| {
            if (lo..lo + gap).contains(&i) {
                Region::Distorted
            } else {
                Region::Known
            }
        })
        .collect();
    let samples = (0..n)
        .map(|i| match region[i] {
            Region::Known => truth[i],
            Region::Distorted => Curve::Quartic.eval(truth[i]),
        })
        .collect();
    (Signal1D::new(samples, region).unwrap(), truth)
}

pub fn rmse_on(a: &[f64], b: &[f64], idx: impl Iterator<Item = usize>) -> f64 {
    let (mut s, mut c) = (0.0, 0usize);
    for i in idx {
        s += (a[i] - b[i]).powi(2);
        c += 1;
    }
    (s / c as f64).sqrt()
}

/// Monotone S-curve used to generate noiseless fitting data.
pub fn s_curve(x: f64) -> f64 {
    0.5 + 0.45 * (3.0 * (x - 0.5)).tanh() / 1.5f64.tanh()
}

/// Colors whose mean spans `[lo, hi]` evenly, with zero-sum chroma.
pub fn spread_colors(rng: &mut ChaCha8Rng, count: usize, lo: f64, hi: f64) -> Vec<[f64; 3]> {
    (0..count)
        .map(|i| {
            let s = lo + (hi - lo) * (i as f64 + 0.5) / count as f64;
            let room = s.min(1.0 - s).min(0.2) / 2.0;
            let d1 = rng.random_range(-room..=room);
            let d2 = rng.random_range(-room..=room);
            [s + d1, s + d2, s - d1 - d2]
        })
        .collect()
}

pub fn bits(values: impl IntoIterator<Item = f64>) -> Vec<u64> {
    values.into_iter().map(f64::to_bits).collect()
}

pub fn image_bits(img: &ColorImage) -> Vec<u64> {
    bits(img.planes().iter().flatten().copied())
}
