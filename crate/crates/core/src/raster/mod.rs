//! Pixel substrate: RGB images, probability and binary masks, alpha overlays,
//! compositing and pre-removal fills.
//!
//! Channel values are linear reals in `[0, 1]`; no gamma handling is applied.

mod png_io;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use png_io::{
    decode_png, encode_mask_png, encode_png, load_binary_mask, load_image, load_png,
    load_prob_mask, save_mask_png, save_png, save_prob_mask_png, save_rgba_png, Decoded,
};

pub(crate) fn check_dims(expected: (usize, usize), found: (usize, usize)) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn check_unit<T: Scalar>(data: &[T], what: &str) -> Result<()> {
    match data.iter().position(|v| !(*v >= T::zero() && *v <= T::one())) {
        None => Ok(()),
        Some(i) => Err(Error::InvalidRaster(format!(
            "{what} value {} at index {i} outside [0, 1]",
            data[i]
        ))),
    }
}

/// H×W RGB raster, row-major, channels interleaved.
#[derive(Clone, Debug, PartialEq)]
pub struct Image<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Scalar> Image<T> {
    pub fn new(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != height * width * 3 {
            return Err(Error::InvalidRaster(format!(
                "expected {} values for {height}x{width}x3, got {}",
                height * width * 3,
                data.len()
            )));
        }
        check_unit(&data, "channel")?;
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, rgb: [T; 3]) -> Self {
        Self::from_fn(height, width, |_, _| rgb)
    }

    /// Builds an image from a per-pixel function; values are clamped to `[0, 1]`.
    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> [T; 3]) -> Self {
        let mut data = Vec::with_capacity(height * width * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend(f(y, x).iter().map(|v| v.clamp_unit()));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `(height, width)`
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, y: usize, x: usize) -> [T; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, y: usize, x: usize, rgb: [T; 3]) {
        let i = (y * self.width + x) * 3;
        for c in 0..3 {
            self.data[i + c] = rgb[c].clamp_unit();
        }
    }

    pub fn pixels(&self) -> impl Iterator<Item = [T; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// One channel as a contiguous plane.
    pub fn channel(&self, c: usize) -> Vec<T> {
        self.data.iter().skip(c).step_by(3).copied().collect()
    }

    pub fn cast<U: Scalar>(&self) -> Image<U> {
        Image {
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }
}

/// Soft single-channel mask, values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbMask<T> {
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: Scalar> ProbMask<T> {
    pub fn new(height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::InvalidRaster(format!(
                "expected {} mask values for {height}x{width}, got {}",
                height * width,
                data.len()
            )));
        }
        check_unit(&data, "mask")?;
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, v: T) -> Self {
        Self::from_fn(height, width, |_, _| v)
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x).clamp_unit());
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> T {
        self.data[y * self.width + x]
    }
}

impl<T: Scalar> From<&BinaryMask> for ProbMask<T> {
    fn from(m: &BinaryMask) -> Self {
        ProbMask {
            height: m.height,
            width: m.width,
            data: m
                .data
                .iter()
                .map(|&b| if b { T::one() } else { T::zero() })
                .collect(),
        }
    }
}

/// Hard mask; `true` marks watermark / region-to-synthesize pixels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::InvalidRaster(format!(
                "expected {} mask values for {height}x{width}, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![false; height * width],
        }
    }

    pub fn ones(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![true; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> bool {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: bool) {
        self.data[y * self.width + x] = v;
    }

    /// Number of set pixels.
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.data.iter().any(|&b| b)
    }

    pub fn is_full(&self) -> bool {
        self.data.iter().all(|&b| b)
    }

    /// Fraction of set pixels.
    pub fn coverage(&self) -> f64 {
        if self.data.is_empty() {
            0.0
        } else {
            self.count() as f64 / self.data.len() as f64
        }
    }

    /// `self ⊆ other` as pixel sets.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims()
            && self.data.iter().zip(&other.data).all(|(&a, &b)| !a || b)
    }
}

/// RGB raster plus a per-pixel alpha plane.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageWithAlpha<T> {
    rgb: Image<T>,
    alpha: Vec<T>,
}

impl<T: Scalar> ImageWithAlpha<T> {
    pub fn new(rgb: Image<T>, alpha: Vec<T>) -> Result<Self> {
        if alpha.len() != rgb.height * rgb.width {
            return Err(Error::InvalidRaster(format!(
                "alpha plane has {} values for a {}x{} image",
                alpha.len(),
                rgb.height,
                rgb.width
            )));
        }
        check_unit(&alpha, "alpha")?;
        Ok(Self { rgb, alpha })
    }

    pub fn opaque(rgb: Image<T>) -> Self {
        let n = rgb.height * rgb.width;
        Self {
            rgb,
            alpha: vec![T::one(); n],
        }
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> ([T; 3], T),
    ) -> Self {
        let mut alpha = Vec::with_capacity(height * width);
        let rgb = Image::from_fn(height, width, |y, x| {
            let (c, a) = f(y, x);
            alpha.push(a.clamp_unit());
            c
        });
        Self { rgb, alpha }
    }

    pub fn rgb(&self) -> &Image<T> {
        &self.rgb
    }

    pub fn alpha(&self) -> &[T] {
        &self.alpha
    }

    pub fn dims(&self) -> (usize, usize) {
        self.rgb.dims()
    }

    #[inline]
    pub fn alpha_at(&self, y: usize, x: usize) -> T {
        self.alpha[y * self.rgb.width + x]
    }

    pub fn into_image(self) -> Image<T> {
        self.rgb
    }
}

/// Blends `overlay` onto `base` with its top-left corner at `origin = (row, col)`.
///
/// Per pixel `out = a·overlay + (1 − a)·base` with `a = alpha × opacity_scale`.
/// Parts of the overlay falling outside `base` are clipped.
pub fn composite<T: Scalar>(
    base: &Image<T>,
    overlay: &ImageWithAlpha<T>,
    origin: (isize, isize),
    opacity_scale: T,
) -> Image<T> {
    let mut out = base.clone();
    let scale = opacity_scale.clamp_unit();
    if scale == T::zero() {
        return out;
    }
    let (oh, ow) = overlay.dims();
    for oy in 0..oh {
        let y = origin.0 + oy as isize;
        if y < 0 || y >= base.height as isize {
            continue;
        }
        for ox in 0..ow {
            let x = origin.1 + ox as isize;
            if x < 0 || x >= base.width as isize {
                continue;
            }
            let a = overlay.alpha_at(oy, ox) * scale;
            if a == T::zero() {
                continue;
            }
            let (y, x) = (y as usize, x as usize);
            let b = base.pixel(y, x);
            let o = overlay.rgb.pixel(oy, ox);
            let mut px = [T::zero(); 3];
            for c in 0..3 {
                px[c] = a * o[c] + (T::one() - a) * b[c];
            }
            out.set_pixel(y, x, px);
        }
    }
    out
}

/// What to write into the masked region before inpainting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FillStrategy {
    None,
    White,
    Black,
    Gray,
    #[default]
    #[serde(rename = "avg-bg")]
    AverageBackground,
}

impl FillStrategy {
    pub const ALL: [FillStrategy; 5] = [
        FillStrategy::None,
        FillStrategy::White,
        FillStrategy::Black,
        FillStrategy::Gray,
        FillStrategy::AverageBackground,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FillStrategy::None => "none",
            FillStrategy::White => "white",
            FillStrategy::Black => "black",
            FillStrategy::Gray => "gray",
            FillStrategy::AverageBackground => "avg-bg",
        }
    }
}

impl fmt::Display for FillStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FillStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FillStrategy::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown fill {s:?}; expected one of none, white, black, gray, avg-bg"
                ))
            })
    }
}

/// Per-channel mean over pixels where `mask` is unset.
pub fn background_mean<T: Scalar>(image: &Image<T>, mask: &BinaryMask) -> Result<[T; 3]> {
    check_dims(image.dims(), mask.dims())?;
    let mut sum = [T::zero(); 3];
    let mut n = 0usize;
    for (px, &m) in image.pixels().zip(mask.data()) {
        if !m {
            for c in 0..3 {
                sum[c] = sum[c] + px[c];
            }
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Degenerate(
            "average-background fill needs at least one unmasked pixel".into(),
        ));
    }
    let n = T::from_count(n);
    Ok(sum.map(|s| s / n))
}

/// Replaces masked pixels according to `strategy`; unmasked pixels are copied verbatim.
pub fn prefill<T: Scalar>(
    image: &Image<T>,
    mask: &BinaryMask,
    strategy: FillStrategy,
) -> Result<Image<T>> {
    check_dims(image.dims(), mask.dims())?;
    let fill = match strategy {
        FillStrategy::None => return Ok(image.clone()),
        FillStrategy::White => [T::one(); 3],
        FillStrategy::Black => [T::zero(); 3],
        FillStrategy::Gray => [T::lit(0.5); 3],
        FillStrategy::AverageBackground => background_mean(image, mask)?,
    };
    let mut out = image.clone();
    for (px, &m) in out.data.chunks_exact_mut(3).zip(mask.data()) {
        if m {
            px.copy_from_slice(&fill);
        }
    }
    Ok(out)
}
