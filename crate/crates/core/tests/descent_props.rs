mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use tinct::descent1d::{steep_desc, steep_desc_observed, Descent1DConfig, Region, Signal1D};
use tinct::descent2d::{
    curvature, fidelity2d, grad_mag, residual2d, steep_desc_2d, steep_desc_2d_observed,
    Descent2DConfig, SweepOrder, WorkingState,
};
use tinct::image::{ColorImage, ObservedScene, PixelState};
use tinct::pipeline::{disk_mask, distort, initial_guess, quality, synthetic_truth};
use tinct::projection::{Curve, NonlinearProjection};
use tinct::TinctError;

fn random_signal(seed: u64, n: usize, lo: f64, hi: f64) -> (Signal1D, Vec<f64>) {
    let mut r = rng(seed);
    let region = (0..n)
        .map(|i| {
            if i != 0 && r.random_bool(0.5) {
                Region::Distorted
            } else {
                Region::Known
            }
        })
        .collect();
    let samples = (0..n).map(|_| r.random_range(lo..hi)).collect();
    let v0 = (0..n).map(|_| r.random_range(lo..hi)).collect();
    (Signal1D::new(samples, region).unwrap(), v0)
}

proptest! {
    #[test]
    fn end_samples_are_never_touched(seed in any::<u64>(), n in 3usize..40) {
        let (s, v0) = random_signal(seed, n, 0.0, 1.0);
        let cfg = Descent1DConfig { dt: 0.05, max_iters: 50, ..Default::default() };
        let out = steep_desc(&Curve::Identity, &s, &v0, &cfg).unwrap();
        prop_assert_eq!(out.values[0].to_bits(), v0[0].to_bits());
        prop_assert_eq!(out.values[n - 1].to_bits(), v0[n - 1].to_bits());
    }

    #[test]
    fn small_steps_decrease_the_energy(seed in any::<u64>(), quartic in any::<bool>()) {
        let (curve, weight, lo, hi) = if quartic {
            (Curve::Quartic, 1.0, 0.55, 0.85)
        } else {
            (Curve::Identity, 10.0, 0.0, 1.0)
        };
        let (s, v0) = random_signal(seed, 24, lo, hi);
        let cfg = Descent1DConfig {
            mu: weight,
            lambda: weight,
            dt: 0.01,
            max_iters: 10,
            eps_stop: 1e-12,
            ..Default::default()
        };
        let mut energies = vec![energy1d(&curve, &v0, &s, cfg.mu, cfg.lambda)];
        steep_desc_observed(&curve, &s, &v0, &cfg, |_, v| {
            energies.push(energy1d(&curve, v, &s, cfg.mu, cfg.lambda));
        })
        .unwrap();
        prop_assert_eq!(energies.len(), 11);
        for p in energies.windows(2) {
            prop_assert!(p[1] < p[0], "energies {:?}", energies);
        }
    }
}

#[test]
fn affine_known_signal_needs_no_sweep() {
    let s = Signal1D::new(
        (0..9).map(|i| 0.1 * i as f64).collect(),
        vec![Region::Known; 9],
    )
    .unwrap();
    let out = steep_desc(&Curve::Quartic, &s, s.samples(), &Descent1DConfig::default()).unwrap();
    assert_eq!(out.iterations, 0);
    assert_eq!(out.trace.len(), 1);
}

#[test]
fn default_step_is_unstable_on_the_quartic_gap() {
    // the λ-term stiffness 2λL'(v)² is about 800 at v = 0.9, far beyond 2/Δt
    let (signal, _) = gap_signal(128, 32);
    let v0 = signal.linear_gap_fill();
    let err = steep_desc(&Curve::Quartic, &signal, &v0, &Descent1DConfig::default()).unwrap_err();
    assert!(matches!(err, TinctError::Divergence { .. }));
}

#[test]
fn trace_has_one_entry_per_sweep_plus_the_final_check() {
    let (signal, _) = gap_signal(64, 16);
    let cfg = Descent1DConfig {
        dt: 0.002,
        max_iters: 40,
        eps_stop: 1e-14,
        ..Default::default()
    };
    let out = steep_desc(&Curve::Quartic, &signal, &signal.linear_gap_fill(), &cfg).unwrap();
    assert_eq!(out.iterations, 40);
    assert!(!out.converged);
    assert_eq!(out.trace.len(), 41);
}

fn small_scene(seed: u64) -> (ObservedScene, ColorImage) {
    let mut r = rng(seed);
    let scene = random_scene(&mut r, 12, 10);
    let u0 = random_color(&mut r, 12, 10);
    (scene, u0)
}

#[test]
fn channels_decouple_without_the_gray_term() {
    let (scene, u0) = small_scene(1);
    let p = NonlinearProjection::mean();
    let cfg = Descent2DConfig {
        lambda: 0.0,
        max_iters: 40,
        eps_stop: f64::MIN_POSITIVE,
        ..Default::default()
    };
    let joint = steep_desc_2d(&p, &scene, &u0, &cfg).unwrap();
    for k in 0..3 {
        // zero the other channels in both the scene and the start
        let keep = |img: &ColorImage| {
            ColorImage::from_fn(12, 10, |x, y| {
                let v = img.get(x, y);
                std::array::from_fn(|c| if c == k { v[c] } else { 0.0 })
            })
            .unwrap()
        };
        let alone_scene =
            ObservedScene::new(keep(scene.color()), scene.gray().clone(), scene.mask().clone())
                .unwrap();
        let alone = steep_desc_2d(&p, &alone_scene, &keep(&u0), &cfg).unwrap();
        assert_eq!(
            bits(alone.image.plane(k).iter().copied()),
            bits(joint.image.plane(k).iter().copied())
        );
    }
}

#[test]
fn frame_and_fragments_stay_fixed() {
    let (scene, u0) = small_scene(2);
    let p = NonlinearProjection::mean();
    let cfg = Descent2DConfig {
        max_iters: 30,
        ..Default::default()
    };
    let out = steep_desc_2d(&p, &scene, &u0, &cfg).unwrap();
    for idx in 0..120 {
        let (i, j) = (idx % 12, idx / 12);
        let framed = i < 2 || j < 2 || i >= 10 || j >= 8;
        if scene.mask().at(idx) == PixelState::KnownColor {
            assert_eq!(out.image.at(idx), scene.color().at(idx));
        } else if framed {
            assert_eq!(out.image.at(idx), u0.at(idx));
        }
    }
}

#[test]
fn sweeps_are_independent_of_worker_count() {
    let (scene, u0) = small_scene(3);
    let p = NonlinearProjection::new([0.2, 0.5, 0.3], Curve::Quartic).unwrap();
    let cfg = Descent2DConfig {
        max_iters: 25,
        dt: 0.01,
        ..Default::default()
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| steep_desc_2d(&p, &scene, &u0, &cfg).unwrap())
    };
    let (a, b) = (run(1), run(3));
    assert_eq!(image_bits(&a.image), image_bits(&b.image));
    assert_eq!(bits(a.trace), bits(b.trace));
}

#[test]
fn unknown_pixels_diffuse_without_fidelity() {
    let (scene, u0) = small_scene(4);
    let p = NonlinearProjection::mean();
    let cfg = Descent2DConfig::default();
    let state = WorkingState::new(&scene, &u0).unwrap();
    let mut seen = 0;
    for j in 2..8 {
        for i in 2..10 {
            let idx = j * 12 + i;
            if scene.mask().at(idx) != PixelState::Unknown {
                continue;
            }
            seen += 1;
            for k in 0..3 {
                assert_eq!(fidelity2d(&p, u0.at(idx), &scene, &cfg, idx, k), 0.0);
                let plane = tinct::descent2d::Plane::new(u0.plane(k), 12, 10);
                let lead = grad_mag(plane, i, j, cfg.grad_eps) * curvature(plane, i, j, cfg.grad_eps);
                assert_eq!(residual2d(&p, &state, &cfg, i, j, k), lead);
            }
        }
    }
    assert!(seen > 0);
}

#[test]
fn gray_term_is_bounded_by_residual_and_smoothing() {
    let (scene, u0) = small_scene(5);
    let p = NonlinearProjection::mean();
    let cfg = Descent2DConfig {
        max_iters: 200,
        ..Default::default()
    };
    let out = steep_desc_2d(&p, &scene, &u0, &cfg).unwrap();
    let state = WorkingState::new(&scene, &out.image).unwrap();
    for j in 2..8 {
        for i in 2..10 {
            let idx = j * 12 + i;
            if scene.mask().at(idx) != PixelState::GrayOnly {
                continue;
            }
            for k in 0..3 {
                let r = residual2d(&p, &state, &cfg, i, j, k);
                let fid = fidelity2d(&p, out.image.at(idx), &scene, &cfg, idx, k);
                let smooth = r - fid;
                assert!(fid.abs() <= r.abs() + smooth.abs() + 1e-12);
            }
        }
    }
}

#[test]
fn gauss_seidel_order_runs_and_keeps_fragments() {
    let (scene, u0) = small_scene(6);
    let p = NonlinearProjection::mean();
    let cfg = Descent2DConfig {
        order: SweepOrder::GaussSeidel,
        max_iters: 50,
        ..Default::default()
    };
    let gs = steep_desc_2d(&p, &scene, &u0, &cfg).unwrap();
    let jacobi = steep_desc_2d(
        &p,
        &scene,
        &u0,
        &Descent2DConfig {
            max_iters: 50,
            ..Default::default()
        },
    )
    .unwrap();
    for i in scene.mask().known_indices() {
        assert_eq!(gs.image.at(i), scene.color().at(i));
    }
    assert_ne!(image_bits(&gs.image), image_bits(&jacobi.image));
}

#[test]
fn descent_alone_improves_a_dense_fragment_scene() {
    // 50 radius-3 disks; diffusion over 300 sweeps reaches a few pixels, so
    // the gain depends on fragment density
    let truth = synthetic_truth(64, 64, 4, 0).unwrap();
    let mask = disk_mask(64, 64, 50, 3, 100).unwrap();
    let p = NonlinearProjection::mean();
    let scene = distort(&truth, &mask, &p).unwrap();
    let u0 = initial_guess(scene.color(), scene.mask(), scene.gray(), &p).unwrap();
    let start = quality(&u0, &truth, &mask).unwrap().psnr_db();
    let mut trace = Vec::new();
    let cfg = Descent2DConfig {
        max_iters: 300,
        ..Default::default()
    };
    let out = steep_desc_2d_observed(&p, &scene, &u0, &cfg, |_, planes| {
        let img = ColorImage::from_planes(64, 64, planes.clone())?;
        trace.push(quality(&img, &truth, &mask)?.psnr_db());
        Ok(())
    })
    .unwrap();
    assert_eq!(out.clamp_count, 0);
    assert!(trace[0] > start);
    assert!(trace[..50].windows(2).all(|w| w[1] > w[0]));
    let gain = trace.last().unwrap() - start;
    assert!(gain >= 3.0, "gain {gain:.2} dB");
}

#[test]
fn default_step_exceeds_the_linear_stability_bound() {
    // explicit Euler on Δ² - 2μ needs Δt < 2 / (4 + 2μ) = 1/12 at μ = 10
    let n = 16;
    let samples: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 0.4 } else { 0.6 }).collect();
    let s = Signal1D::new(samples.clone(), vec![Region::Known; n]).unwrap();
    let v0: Vec<f64> = samples.iter().map(|v| 1.0 - v).collect();
    let stable = Descent1DConfig {
        dt: 0.08,
        ..Default::default()
    };
    assert!(steep_desc(&Curve::Identity, &s, &v0, &stable).unwrap().converged);
    assert!(matches!(
        steep_desc(&Curve::Identity, &s, &v0, &Descent1DConfig::default()),
        Err(TinctError::Divergence { .. })
    ));
}
