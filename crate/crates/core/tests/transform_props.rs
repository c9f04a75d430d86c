mod common;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use tinct::gabor::{adjoint, coefficient_inner, project, spectrogram, stft, GaborFrame, TFCoefficients};

fn frame() -> GaborFrame {
    GaborFrame::hann(64, 8, 16).unwrap()
}

fn signal() -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 64)
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
}

fn coefficients() -> impl Strategy<Value = TFCoefficients> {
    signal()
        .prop_flat_map(|a| (Just(a), signal()))
        .prop_map(|(a, b)| TFCoefficients::from_vec(8, 16, [a, b].concat()).unwrap())
}

proptest! {
    #[test]
    fn stft_matches_direct_sums(f in signal()) {
        let fr = frame();
        prop_assert!(l2_diff(stft(&fr, &f).data(), &naive_stft(&fr, &f)) <= 1e-12);
    }

    #[test]
    fn adjointness(f in signal(), c in coefficients()) {
        let fr = frame();
        let lhs = coefficient_inner(&fr, &stft(&fr, &f), &c);
        let rhs: Complex64 = f
            .iter()
            .zip(adjoint(&fr, &c).unwrap())
            .map(|(x, y)| x * y.conj())
            .sum();
        prop_assert!((lhs - rhs).norm() <= 1e-10);
    }

    #[test]
    fn range_is_invariant_under_projection(f in signal()) {
        let fr = frame();
        let c = stft(&fr, &f);
        prop_assert!(l2_diff(project(&fr, &c).unwrap().data(), c.data()) <= 1e-10);
    }
}

#[test]
fn zero_coefficients_synthesize_zero() {
    let fr = frame();
    let out = adjoint(&fr, &TFCoefficients::zeros(8, 16)).unwrap();
    assert!(out.iter().all(|z| *z == Complex64::new(0.0, 0.0)));
}

#[test]
fn impulse_columns_vary_with_the_window() {
    // for δ_{t0}, |c(k, m)| = |g(t0 - k a)| for every m, so adjacent columns
    // differ by at most √M · max_t |g(t) - g(t - a)|
    let fr = frame();
    let g = fr.window();
    let continuity = (0..64)
        .map(|t| (g[t] - g[(t + 64 - 8) % 64]).abs())
        .fold(0.0, f64::max);
    for t0 in [0usize, 5, 31, 63] {
        let mut f = vec![Complex64::new(0.0, 0.0); 64];
        f[t0] = Complex64::new(1.0, 0.0);
        let c = stft(&fr, &f);
        for k in 0..8 {
            let expected = g[(t0 + 64 - 8 * k) % 64].abs();
            for m in 0..16 {
                assert!((c.get(k, m).norm() - expected).abs() < 1e-12);
            }
            let next = (k + 1) % 8;
            let diff: f64 = (0..16)
                .map(|m| (c.get(k, m).norm() - c.get(next, m).norm()).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(diff <= 4.0 * continuity + 1e-12);
        }
    }
}

#[test]
fn spectrogram_peaks_at_the_tone_frequency() {
    let fr = frame();
    // 4 cycles per 16 samples lands in bin 4
    let f: Vec<Complex64> = (0..64)
        .map(|t| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * 4.0 * t as f64 / 16.0))
        .collect();
    let img = spectrogram(&stft(&fr, &f));
    assert_eq!((img.width(), img.height()), (8, 16));
    for k in 0..8 {
        assert!((img.get(k, 4) - 1.0).abs() < 1e-9);
        assert!((0..16).filter(|&m| m != 4).all(|m| img.get(k, m) < 1.0));
    }
}

#[test]
fn custom_windows_are_normalized_to_a_tight_frame() {
    let window: Vec<f64> = (0..64).map(|t| if t < 12 { 1.0 + t as f64 } else { 0.0 }).collect();
    let fr = GaborFrame::new(window, 4, 16).unwrap();
    let mut r = rng(8);
    let f = random_complex(&mut r, 64);
    let back = adjoint(&fr, &stft(&fr, &f)).unwrap();
    assert!(l2_diff(&back, &f) <= 1e-10);
    let norm: f64 = fr.window().iter().map(|g| g * g).sum();
    assert!((norm - 1.0).abs() < 1e-12);
}
