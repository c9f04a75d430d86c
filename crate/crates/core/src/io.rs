//! Binary PNM (P5 graymap / P6 pixmap) reading and writing, 8-bit only.
//!
//! Samples map to `[0, 1]` by division by 255; writing rounds half-up.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Result, TinctError};
use crate::image::{ColorImage, GrayImage, ObservedScene, PixelMask, PixelState};

/// Scene directory member names.
pub const COLOR_FILE: &str = "color.p6";
pub const GRAY_FILE: &str = "gray.p5";
pub const MASK_FILE: &str = "mask.p5";
pub const TRUTH_FILE: &str = "truth.p6";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    /// 1 for P5, 3 for P6.
    pub channels: usize,
    pub samples: Vec<u8>,
}

pub fn to_byte(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn from_byte(b: u8) -> f64 {
    f64::from(b) / 255.0
}

fn format_err(path: &Path, reason: impl Into<String>) -> TinctError {
    TinctError::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Header tokens are separated by whitespace; `#` starts a comment running to
/// the end of the line.
fn next_token(data: &[u8], pos: &mut usize) -> Option<String> {
    loop {
        while *pos < data.len() && data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < data.len() && data[*pos] == b'#' {
            while *pos < data.len() && data[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < data.len() && !data[*pos].is_ascii_whitespace() && data[*pos] != b'#' {
        *pos += 1;
    }
    (start < *pos).then(|| String::from_utf8_lossy(&data[start..*pos]).into_owned())
}

pub fn decode_pnm(data: &[u8], path: &Path) -> Result<Raster> {
    let mut pos = 0;
    let magic = next_token(data, &mut pos).ok_or_else(|| format_err(path, "empty file"))?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(format_err(path, format!("unsupported magic {other:?}"))),
    };
    let mut field = |name: &str| -> Result<usize> {
        next_token(data, &mut pos)
            .ok_or_else(|| format_err(path, format!("missing {name}")))?
            .parse::<usize>()
            .map_err(|_| format_err(path, format!("bad {name}")))
    };
    let width = field("width")?;
    let height = field("height")?;
    let maxval = field("maxval")?;
    if width == 0 || height == 0 {
        return Err(format_err(path, "zero dimension"));
    }
    if maxval != 255 {
        return Err(format_err(path, format!("maxval {maxval}, only 255 is supported")));
    }
    // exactly one whitespace byte separates the header from the samples
    if pos >= data.len() || !data[pos].is_ascii_whitespace() {
        return Err(format_err(path, "truncated header"));
    }
    pos += 1;
    let n = width * height * channels;
    if data.len() - pos < n {
        return Err(format_err(
            path,
            format!("expected {n} sample bytes, found {}", data.len() - pos),
        ));
    }
    Ok(Raster {
        width,
        height,
        channels,
        samples: data[pos..pos + n].to_vec(),
    })
}

pub fn encode_pnm(raster: &Raster) -> Vec<u8> {
    let magic = if raster.channels == 3 { "P6" } else { "P5" };
    let mut out = format!("{magic}\n{} {}\n255\n", raster.width, raster.height).into_bytes();
    out.extend_from_slice(&raster.samples);
    out
}

pub fn read_raster(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| TinctError::io(path, e))?;
    decode_pnm(&data, path)
}

pub fn write_raster(raster: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| TinctError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&encode_pnm(raster))
        .and_then(|_| w.flush())
        .map_err(|e| TinctError::io(path, e))
}

fn expect_channels(r: &Raster, channels: usize, path: &Path) -> Result<()> {
    if r.channels != channels {
        let want = if channels == 3 { "P6" } else { "P5" };
        return Err(format_err(path, format!("expected a {want} raster")));
    }
    Ok(())
}

pub fn load_color(path: impl AsRef<Path>) -> Result<ColorImage> {
    let path = path.as_ref();
    let r = read_raster(path)?;
    expect_channels(&r, 3, path)?;
    let mut planes: [Vec<f64>; 3] = Default::default();
    for (k, plane) in planes.iter_mut().enumerate() {
        *plane = r.samples.iter().skip(k).step_by(3).map(|&b| from_byte(b)).collect();
    }
    ColorImage::from_planes(r.width, r.height, planes)
}

pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let r = read_raster(path)?;
    expect_channels(&r, 1, path)?;
    GrayImage::from_vec(r.width, r.height, r.samples.iter().map(|&b| from_byte(b)).collect())
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<PixelMask> {
    let path = path.as_ref();
    let r = read_raster(path)?;
    expect_channels(&r, 1, path)?;
    let states = r
        .samples
        .iter()
        .map(|&b| {
            PixelState::from_byte(b)
                .ok_or_else(|| format_err(path, format!("mask value {b} is not one of 0/128/255")))
        })
        .collect::<Result<Vec<_>>>()?;
    PixelMask::from_states(r.width, r.height, states)
}

pub fn color_raster(img: &ColorImage) -> Raster {
    let mut samples = Vec::with_capacity(img.len() * 3);
    for i in 0..img.len() {
        samples.extend(img.at(i).map(to_byte));
    }
    Raster {
        width: img.width(),
        height: img.height(),
        channels: 3,
        samples,
    }
}

pub fn gray_raster(img: &GrayImage) -> Raster {
    Raster {
        width: img.width(),
        height: img.height(),
        channels: 1,
        samples: img.data().iter().map(|&v| to_byte(v)).collect(),
    }
}

pub fn mask_raster(mask: &PixelMask) -> Raster {
    Raster {
        width: mask.width(),
        height: mask.height(),
        channels: 1,
        samples: mask.states().iter().map(|s| s.to_byte()).collect(),
    }
}

/// Anything that can be written as an 8-bit PNM.
pub trait ToRaster {
    fn to_raster(&self) -> Raster;
}

impl ToRaster for ColorImage {
    fn to_raster(&self) -> Raster {
        color_raster(self)
    }
}

impl ToRaster for GrayImage {
    fn to_raster(&self) -> Raster {
        gray_raster(self)
    }
}

impl ToRaster for PixelMask {
    fn to_raster(&self) -> Raster {
        mask_raster(self)
    }
}

pub fn save_image(img: &impl ToRaster, path: impl AsRef<Path>) -> Result<()> {
    write_raster(&img.to_raster(), path)
}

fn check_same(path: &Path, w: usize, h: usize, fw: usize, fh: usize) -> Result<()> {
    if (w, h) != (fw, fh) {
        return Err(TinctError::DimensionMismatch {
            path: path.to_path_buf(),
            expected_w: w,
            expected_h: h,
            found_w: fw,
            found_h: fh,
        });
    }
    Ok(())
}

/// Loads a scene from its three rasters. The color file fixes the expected
/// dimensions; a mismatch is reported against the offending file.
pub fn load_scene(
    color_path: impl AsRef<Path>,
    gray_path: impl AsRef<Path>,
    mask_path: impl AsRef<Path>,
) -> Result<ObservedScene> {
    let color = load_color(color_path.as_ref())?;
    let (w, h) = (color.width(), color.height());
    let gray = load_gray(gray_path.as_ref())?;
    check_same(gray_path.as_ref(), w, h, gray.width(), gray.height())?;
    let mask = load_mask(mask_path.as_ref())?;
    check_same(mask_path.as_ref(), w, h, mask.width(), mask.height())?;
    ObservedScene::new(color, gray, mask)
}

/// Loads `color.p6`, `gray.p5`, `mask.p5` and, when present, `truth.p6`.
pub fn load_scene_dir(dir: impl AsRef<Path>) -> Result<(ObservedScene, Option<ColorImage>)> {
    let dir = dir.as_ref();
    let scene = load_scene(dir.join(COLOR_FILE), dir.join(GRAY_FILE), dir.join(MASK_FILE))?;
    let truth_path = dir.join(TRUTH_FILE);
    let truth = if truth_path.exists() {
        let t = load_color(&truth_path)?;
        check_same(&truth_path, scene.width(), scene.height(), t.width(), t.height())?;
        Some(t)
    } else {
        None
    };
    Ok((scene, truth))
}

pub fn save_scene_dir(
    scene: &ObservedScene,
    truth: Option<&ColorImage>,
    dir: impl AsRef<Path>,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| TinctError::io(dir, e))?;
    save_image(scene.color(), dir.join(COLOR_FILE))?;
    save_image(scene.gray(), dir.join(GRAY_FILE))?;
    save_image(scene.mask(), dir.join(MASK_FILE))?;
    if let Some(t) = truth {
        save_image(t, dir.join(TRUTH_FILE))?;
    }
    Ok(())
}

/// `<dir>/<stem>_<index>.<ext>` with a zero-padded index.
pub fn numbered_path(dir: &Path, stem: &str, index: usize, ext: &str) -> PathBuf {
    dir.join(format!("{stem}_{index:05}.{ext}"))
}
