//! Grid containers shared by every solver.
//!
//! All images are row-major with values normalized to `[0, 1]`. Pixel `(x, y)`
//! lives at index `y * width + x`.

use crate::error::{Result, TinctError};

fn check_unit(v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(TinctError::OutOfRange {
            value: v,
            lo: 0.0,
            hi: 1.0,
        })
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(TinctError::InvalidParameter(format!(
            "image dimensions must be positive, got {width}x{height}"
        )));
    }
    Ok(())
}

/// Three-channel RGB image stored as separate planes.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    planes: [Vec<f64>; 3],
}

impl ColorImage {
    /// Black image.
    pub fn new(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        let n = width * height;
        Ok(Self {
            width,
            height,
            planes: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        })
    }

    pub fn from_planes(width: usize, height: usize, planes: [Vec<f64>; 3]) -> Result<Self> {
        check_dims(width, height)?;
        for plane in &planes {
            if plane.len() != width * height {
                return Err(TinctError::ShapeMismatch(format!(
                    "plane of length {} for {width}x{height} image",
                    plane.len()
                )));
            }
            plane.iter().try_for_each(|&v| check_unit(v))?;
        }
        Ok(Self {
            width,
            height,
            planes,
        })
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let mut img = Self::new(width, height)?;
        for y in 0..height {
            for x in 0..width {
                img.set(x, y, f(x, y))?;
            }
        }
        Ok(img)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn plane(&self, k: usize) -> &[f64] {
        &self.planes[k]
    }

    pub fn planes(&self) -> &[Vec<f64>; 3] {
        &self.planes
    }

    pub fn into_planes(self) -> [Vec<f64>; 3] {
        self.planes
    }

    pub fn at(&self, idx: usize) -> [f64; 3] {
        [self.planes[0][idx], self.planes[1][idx], self.planes[2][idx]]
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.at(y * self.width + x)
    }

    pub fn set_at(&mut self, idx: usize, rgb: [f64; 3]) -> Result<()> {
        rgb.iter().try_for_each(|&v| check_unit(v))?;
        for (plane, v) in self.planes.iter_mut().zip(rgb) {
            plane[idx] = v;
        }
        Ok(())
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [f64; 3]) -> Result<()> {
        let idx = y * self.width + x;
        self.set_at(idx, rgb)
    }

    pub fn same_shape(&self, width: usize, height: usize) -> bool {
        self.width == width && self.height == height
    }
}

/// Single-plane gray-level image.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![0.0; width * height],
        })
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(TinctError::ShapeMismatch(format!(
                "gray buffer of length {} for {width}x{height} image",
                data.len()
            )));
        }
        data.iter().try_for_each(|&v| check_unit(v))?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn at(&self, idx: usize) -> f64 {
        self.data[idx]
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn set_at(&mut self, idx: usize, v: f64) -> Result<()> {
        check_unit(v)?;
        self.data[idx] = v;
        Ok(())
    }
}

/// Observation state of a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PixelState {
    /// Full color is known (a fragment, or a pixel promoted by interpolation).
    KnownColor,
    /// Only the gray level is known.
    GrayOnly,
    /// Nothing is known.
    Unknown,
}

impl PixelState {
    /// Raster encoding: 255 / 128 / 0.
    pub fn to_byte(self) -> u8 {
        match self {
            PixelState::KnownColor => 255,
            PixelState::GrayOnly => 128,
            PixelState::Unknown => 0,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            255 => Some(PixelState::KnownColor),
            128 => Some(PixelState::GrayOnly),
            0 => Some(PixelState::Unknown),
            _ => None,
        }
    }

    /// Whether the gray plane carries data at a pixel in this state.
    ///
    /// Fragments sit on top of the gray plate, so known-color pixels have a
    /// gray value as well; only `Unknown` pixels lack one.
    pub fn has_gray(self) -> bool {
        !matches!(self, PixelState::Unknown)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    width: usize,
    height: usize,
    states: Vec<PixelState>,
}

impl PixelMask {
    pub fn filled(width: usize, height: usize, state: PixelState) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            states: vec![state; width * height],
        })
    }

    pub fn from_states(width: usize, height: usize, states: Vec<PixelState>) -> Result<Self> {
        check_dims(width, height)?;
        if states.len() != width * height {
            return Err(TinctError::ShapeMismatch(format!(
                "mask of length {} for {width}x{height} image",
                states.len()
            )));
        }
        Ok(Self {
            width,
            height,
            states,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn states(&self) -> &[PixelState] {
        &self.states
    }

    pub fn at(&self, idx: usize) -> PixelState {
        self.states[idx]
    }

    pub fn get(&self, x: usize, y: usize) -> PixelState {
        self.states[y * self.width + x]
    }

    pub fn set_at(&mut self, idx: usize, state: PixelState) {
        self.states[idx] = state;
    }

    pub fn set(&mut self, x: usize, y: usize, state: PixelState) {
        self.states[y * self.width + x] = state;
    }

    pub fn count(&self, state: PixelState) -> usize {
        self.states.iter().filter(|&&s| s == state).count()
    }

    /// Row-major indices of known-color pixels.
    pub fn known_indices(&self) -> Vec<usize> {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == PixelState::KnownColor)
            .map(|(i, _)| i)
            .collect()
    }
}

/// What is observed of the image to restore.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedScene {
    color: ColorImage,
    gray: GrayImage,
    mask: PixelMask,
}

impl ObservedScene {
    pub fn new(color: ColorImage, gray: GrayImage, mask: PixelMask) -> Result<Self> {
        let (w, h) = (mask.width(), mask.height());
        if !color.same_shape(w, h) || gray.width() != w || gray.height() != h {
            return Err(TinctError::ShapeMismatch(format!(
                "color {}x{}, gray {}x{}, mask {w}x{h}",
                color.width(),
                color.height(),
                gray.width(),
                gray.height()
            )));
        }
        Ok(Self { color, gray, mask })
    }

    pub fn width(&self) -> usize {
        self.mask.width()
    }

    pub fn height(&self) -> usize {
        self.mask.height()
    }

    pub fn len(&self) -> usize {
        self.width() * self.height()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn color(&self) -> &ColorImage {
        &self.color
    }

    pub fn gray(&self) -> &GrayImage {
        &self.gray
    }

    pub fn mask(&self) -> &PixelMask {
        &self.mask
    }

    pub fn into_parts(self) -> (ColorImage, GrayImage, PixelMask) {
        (self.color, self.gray, self.mask)
    }
}
