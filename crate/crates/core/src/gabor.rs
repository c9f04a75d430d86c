//! Discrete short-time Fourier (Gabor) analysis on the cyclic group `Z_N`.
//!
//! Coefficients are `c(k, m) = Σ_t f(t) conj(g(t - k a)) e^{-2πi m t / M}` for
//! time shifts `k < N / a` and frequency bins `m < M`. Windows are restricted
//! to supports of at most `M` samples, where the frame operator is diagonal;
//! the constructor rescales the window so analysis followed by synthesis is
//! the identity and the window keeps unit norm.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, TinctError};
use crate::image::GrayImage;

#[derive(Debug, Clone, PartialEq)]
pub struct GaborFrame {
    window: Vec<f64>,
    /// Nonzero window samples as `(offset, value)`.
    support: Vec<(usize, f64)>,
    hop: usize,
    bins: usize,
    /// `e^{-2πi j / M}`.
    twiddle: Vec<Complex64>,
}

/// Length of the shortest cyclic interval containing every nonzero sample.
fn cyclic_support_len(window: &[f64]) -> usize {
    let n = window.len();
    let nonzero: Vec<usize> = (0..n).filter(|&t| window[t] != 0.0).collect();
    if nonzero.is_empty() {
        return 0;
    }
    let mut largest_gap = 0;
    for (i, &t) in nonzero.iter().enumerate() {
        let next = nonzero[(i + 1) % nonzero.len()];
        let gap = (next + n - t - 1) % n;
        largest_gap = largest_gap.max(gap);
    }
    if nonzero.len() == 1 {
        return 1;
    }
    n - largest_gap
}

impl GaborFrame {
    /// Builds the canonical tight frame from `window` (length `N`), hop `a`
    /// and `M` frequency bins. The window is divided pointwise by
    /// `sqrt(a · Σ_k |g(t - k a)|²)`.
    pub fn new(window: Vec<f64>, hop: usize, bins: usize) -> Result<Self> {
        let n = window.len();
        if n == 0 || hop == 0 || bins == 0 || !n.is_multiple_of(hop) || !n.is_multiple_of(bins) {
            return Err(TinctError::InvalidParameter(format!(
                "hop {hop} and bins {bins} must be positive divisors of the length {n}"
            )));
        }
        if window.iter().any(|v| !v.is_finite()) {
            return Err(TinctError::InvalidParameter("non-finite window".into()));
        }
        let support = cyclic_support_len(&window);
        if support == 0 {
            return Err(TinctError::InvalidParameter("window is zero".into()));
        }
        if support > bins {
            return Err(TinctError::InvalidParameter(format!(
                "window support {support} exceeds the {bins} frequency bins"
            )));
        }
        let diag = frame_diagonal(&window, hop);
        if diag.iter().any(|&d| d <= 0.0) {
            return Err(TinctError::InvalidParameter(format!(
                "window leaves gaps at hop {hop}; the frame is incomplete"
            )));
        }
        let scale = hop as f64;
        let window: Vec<f64> = window
            .iter()
            .zip(&diag)
            .map(|(&g, &d)| g / (scale * d).sqrt())
            .collect();
        Ok(Self::from_normalized(window, hop, bins))
    }

    fn from_normalized(window: Vec<f64>, hop: usize, bins: usize) -> Self {
        let support = window
            .iter()
            .enumerate()
            .filter(|(_, &g)| g != 0.0)
            .map(|(t, &g)| (t, g))
            .collect();
        let twiddle = (0..bins)
            .map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / bins as f64))
            .collect();
        Self {
            window,
            support,
            hop,
            bins,
            twiddle,
        }
    }

    /// Periodic Hann window of `bins` samples centred on `t = 0`.
    pub fn hann(len: usize, hop: usize, bins: usize) -> Result<Self> {
        if bins > len {
            return Err(TinctError::InvalidParameter(format!(
                "{bins} bins exceed the signal length {len}"
            )));
        }
        let mut window = vec![0.0; len];
        for j in 0..bins {
            let s = (PI * (j as f64 + 0.5) / bins as f64).sin();
            let t = (j + len - bins / 2) % len;
            window[t] = s * s;
        }
        Self::new(window, hop, bins)
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn time_shifts(&self) -> usize {
        self.len() / self.hop
    }

    pub fn window(&self) -> &[f64] {
        &self.window
    }

    /// Synthesis scale `a / M`; also the weight of the coefficient inner
    /// product that makes [`adjoint`] the true adjoint of [`stft`].
    pub fn coefficient_weight(&self) -> f64 {
        self.hop as f64 / self.bins as f64
    }
}

/// `Σ_k |g(t - k a)|²` for every `t`.
pub fn frame_diagonal(window: &[f64], hop: usize) -> Vec<f64> {
    let n = window.len();
    (0..n)
        .map(|t| {
            (0..n / hop)
                .map(|k| {
                    let g = window[(t + n - (k * hop) % n) % n];
                    g * g
                })
                .sum()
        })
        .collect()
}

/// Coefficient grid indexed by `(time shift k, frequency m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TFCoefficients {
    shifts: usize,
    bins: usize,
    data: Vec<Complex64>,
}

impl TFCoefficients {
    pub fn zeros(shifts: usize, bins: usize) -> Self {
        Self {
            shifts,
            bins,
            data: vec![Complex64::new(0.0, 0.0); shifts * bins],
        }
    }

    pub fn from_vec(shifts: usize, bins: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != shifts * bins {
            return Err(TinctError::ShapeMismatch(format!(
                "{} coefficients for a {shifts}x{bins} grid",
                data.len()
            )));
        }
        Ok(Self { shifts, bins, data })
    }

    pub fn shifts(&self) -> usize {
        self.shifts
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, k: usize, m: usize) -> Complex64 {
        self.data[k * self.bins + m]
    }

    pub fn column(&self, k: usize) -> &[Complex64] {
        &self.data[k * self.bins..(k + 1) * self.bins]
    }
}

fn check_coeffs(frame: &GaborFrame, c: &TFCoefficients) -> Result<()> {
    if (c.shifts, c.bins) != (frame.time_shifts(), frame.bins) {
        return Err(TinctError::ShapeMismatch(format!(
            "coefficients are {}x{}, frame expects {}x{}",
            c.shifts,
            c.bins,
            frame.time_shifts(),
            frame.bins
        )));
    }
    Ok(())
}

/// Forward transform. Panics if `f.len()` differs from the frame length.
pub fn stft(frame: &GaborFrame, f: &[Complex64]) -> TFCoefficients {
    let n = frame.len();
    assert_eq!(f.len(), n, "signal length does not match the frame");
    let m_count = frame.bins;
    let data: Vec<Complex64> = (0..frame.time_shifts())
        .into_par_iter()
        .flat_map_iter(|k| {
            // fold the windowed signal modulo M, then a length-M DFT
            let mut folded = vec![Complex64::new(0.0, 0.0); m_count];
            for &(u, g) in &frame.support {
                let t = (k * frame.hop + u) % n;
                folded[t % m_count] += f[t] * g;
            }
            (0..m_count).map(move |m| {
                folded
                    .iter()
                    .enumerate()
                    .map(|(r, &h)| h * frame.twiddle[(m * r) % m_count])
                    .sum::<Complex64>()
            })
        })
        .collect();
    TFCoefficients {
        shifts: frame.time_shifts(),
        bins: m_count,
        data,
    }
}

pub fn stft_real(frame: &GaborFrame, f: &[f64]) -> TFCoefficients {
    let embedded: Vec<Complex64> = f.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    stft(frame, &embedded)
}

/// Synthesis `(a/M) Σ_{k,m} c(k,m) e^{2πi m t/M} g(t - k a)`.
pub fn adjoint(frame: &GaborFrame, c: &TFCoefficients) -> Result<Vec<Complex64>> {
    check_coeffs(frame, c)?;
    let n = frame.len();
    let m_count = frame.bins;
    let scale = frame.coefficient_weight();
    // each shift contributes on the window support only; collect per shift and
    // add up in shift order
    let parts: Vec<Vec<(usize, Complex64)>> = (0..frame.time_shifts())
        .into_par_iter()
        .map(|k| {
            let col = c.column(k);
            let inverse: Vec<Complex64> = (0..m_count)
                .map(|r| {
                    col.iter()
                        .enumerate()
                        .map(|(m, &v)| v * frame.twiddle[(m * r) % m_count].conj())
                        .sum()
                })
                .collect();
            frame
                .support
                .iter()
                .map(|&(u, g)| {
                    let t = (k * frame.hop + u) % n;
                    (t, inverse[t % m_count] * (g * scale))
                })
                .collect()
        })
        .collect();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for part in parts {
        for (t, v) in part {
            out[t] += v;
        }
    }
    Ok(out)
}

/// Orthogonal projection onto the range of [`stft`].
pub fn project(frame: &GaborFrame, c: &TFCoefficients) -> Result<TFCoefficients> {
    Ok(stft(frame, &adjoint(frame, c)?))
}

/// `(a/M) Σ c · conj(d)`: the coefficient inner product under which
/// [`adjoint`] is the adjoint of [`stft`] and the transform is an isometry.
pub fn coefficient_inner(frame: &GaborFrame, c: &TFCoefficients, d: &TFCoefficients) -> Complex64 {
    assert_eq!(c.data.len(), d.data.len(), "coefficient grids differ");
    c.data
        .iter()
        .zip(&d.data)
        .map(|(x, y)| x * y.conj())
        .sum::<Complex64>()
        * frame.coefficient_weight()
}

/// Coefficient magnitudes scaled so the largest is 1; time runs along x,
/// frequency along y.
pub fn spectrogram(c: &TFCoefficients) -> GrayImage {
    let max = c.data.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut img = GrayImage::new(c.shifts, c.bins).expect("non-empty grid");
    for k in 0..c.shifts {
        for m in 0..c.bins {
            let v = if max > 0.0 { c.get(k, m).norm() / max } else { 0.0 };
            img.set_at(m * c.shifts + k, v.min(1.0)).expect("in range");
        }
    }
    img
}
