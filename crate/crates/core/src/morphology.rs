//! Binary morphology with square and disk structuring elements.
//!
//! Dilation is the mask-refinement step: every pixel within the kernel
//! footprint of a watermark pixel becomes part of the mask. Neighbours that
//! fall outside the raster read as background for both dilation and erosion.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, ProbMask};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelShape {
    #[default]
    Square,
    Disk,
}

impl fmt::Display for KernelShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelShape::Square => "square",
            KernelShape::Disk => "disk",
        })
    }
}

impl FromStr for KernelShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(KernelShape::Square),
            "disk" => Ok(KernelShape::Disk),
            other => Err(Error::InvalidParameter(format!(
                "unknown kernel {other:?}; expected square or disk"
            ))),
        }
    }
}

/// Footprint of offsets `(dy, dx)` parameterized by the dilation radius `d`.
///
/// Square covers `max(|dy|, |dx|) <= d`, a `(2d+1)²` window; disk covers
/// `dy² + dx² <= d²`. Both are symmetric about the origin, so they equal
/// their own reflection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuringElement {
    shape: KernelShape,
    radius: usize,
    // half-width of the footprint row at dy = i - radius
    spans: Vec<usize>,
}

impl StructuringElement {
    pub fn new(radius: usize, shape: KernelShape) -> Self {
        let r = radius as i64;
        let spans = (-r..=r)
            .map(|dy| match shape {
                KernelShape::Square => radius,
                KernelShape::Disk => {
                    // largest dx with dx² <= r² - dy², exact in integers
                    let rem = r * r - dy * dy;
                    let mut w = (rem as f64).sqrt() as i64;
                    while w * w > rem {
                        w -= 1;
                    }
                    while (w + 1) * (w + 1) <= rem {
                        w += 1;
                    }
                    w as usize
                }
            })
            .collect();
        Self {
            shape,
            radius,
            spans,
        }
    }

    pub fn square(radius: usize) -> Self {
        Self::new(radius, KernelShape::Square)
    }

    pub fn disk(radius: usize) -> Self {
        Self::new(radius, KernelShape::Disk)
    }

    pub fn shape(&self) -> KernelShape {
        self.shape
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// All `(dy, dx)` offsets in row-major order.
    pub fn offsets(&self) -> Vec<(isize, isize)> {
        let r = self.radius as isize;
        self.spans
            .iter()
            .enumerate()
            .flat_map(|(i, &w)| {
                let dy = i as isize - r;
                let w = w as isize;
                (-w..=w).map(move |dx| (dy, dx))
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.spans.iter().map(|w| 2 * w + 1).sum()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn reflect(&self) -> Self {
        // spans are symmetric in dy and dx
        self.clone()
    }

    fn span_rows(&self) -> impl Iterator<Item = (isize, usize)> + '_ {
        let r = self.radius as isize;
        self.spans
            .iter()
            .enumerate()
            .map(move |(i, &w)| (i as isize - r, w))
    }
}

/// Fallible constructor taking a signed radius, as parsed from user input.
pub fn make_kernel(d: i64, shape: KernelShape) -> Result<StructuringElement> {
    if d < 0 {
        return Err(Error::InvalidParameter(format!(
            "dilation parameter must be >= 0, got {d}"
        )));
    }
    Ok(StructuringElement::new(d as usize, shape))
}

/// Per-row inclusive prefix counts; row `y` occupies `(w + 1)` entries.
fn row_prefix(data: &[bool], h: usize, w: usize) -> Vec<u32> {
    let mut p = vec![0u32; h * (w + 1)];
    for y in 0..h {
        let base = y * (w + 1);
        for x in 0..w {
            p[base + x + 1] = p[base + x] + data[y * w + x] as u32;
        }
    }
    p
}

/// Ones in row `y` over columns `[x - half, x + half]` clipped to the raster,
/// plus whether the window was clipped.
#[inline]
fn window_count(p: &[u32], w: usize, y: usize, x: usize, half: usize) -> (u32, bool) {
    let lo = x.saturating_sub(half);
    let hi = (x + half + 1).min(w);
    let base = y * (w + 1);
    (p[base + hi] - p[base + lo], x < half || x + half >= w)
}

fn transpose(data: &[bool], h: usize, w: usize) -> Vec<bool> {
    let mut t = vec![false; h * w];
    for y in 0..h {
        for x in 0..w {
            t[x * h + y] = data[y * w + x];
        }
    }
    t
}

/// 1-D pass along rows. `any` selects dilation (any one in window) versus
/// erosion (full in-bounds window of ones).
fn line_pass(data: &[bool], h: usize, w: usize, half: usize, any: bool) -> Vec<bool> {
    let p = row_prefix(data, h, w);
    let mut out = vec![false; h * w];
    for y in 0..h {
        for x in 0..w {
            let (n, clipped) = window_count(&p, w, y, x, half);
            out[y * w + x] = if any {
                n > 0
            } else {
                !clipped && n as usize == 2 * half + 1
            };
        }
    }
    out
}

fn separable(mask: &BinaryMask, half: usize, any: bool) -> BinaryMask {
    let (h, w) = mask.dims();
    let rows = line_pass(mask.data(), h, w, half, any);
    let cols = line_pass(&transpose(&rows, h, w), w, h, half, any);
    BinaryMask::new(h, w, transpose(&cols, w, h)).expect("dimensions preserved")
}

fn by_spans(mask: &BinaryMask, k: &StructuringElement, any: bool) -> BinaryMask {
    let (h, w) = mask.dims();
    let p = row_prefix(mask.data(), h, w);
    BinaryMask::from_fn(h, w, |y, x| {
        let mut rows = k.span_rows().map(|(dy, half)| {
            let yy = y as isize - dy;
            if yy < 0 || yy >= h as isize {
                // out-of-bounds rows: no hit for dilation, not full for erosion
                return false;
            }
            let (n, clipped) = window_count(&p, w, yy as usize, x, half);
            if any {
                n > 0
            } else {
                !clipped && n as usize == 2 * half + 1
            }
        });
        if any {
            rows.any(|hit| hit)
        } else {
            rows.all(|full| full)
        }
    })
}

/// Binary dilation: `out(p) = max_{o in K} in(p − o)`.
pub fn dilate(mask: &BinaryMask, k: &StructuringElement) -> BinaryMask {
    if k.radius == 0 {
        return mask.clone();
    }
    match k.shape {
        KernelShape::Square => separable(mask, k.radius, true),
        KernelShape::Disk => by_spans(mask, k, true),
    }
}

/// Binary erosion: `out(p) = min_{o in K} in(p − o)`; out-of-bounds reads as 0.
pub fn erode(mask: &BinaryMask, k: &StructuringElement) -> BinaryMask {
    if k.radius == 0 {
        return mask.clone();
    }
    match k.shape {
        KernelShape::Square => separable(mask, k.radius, false),
        KernelShape::Disk => by_spans(mask, k, false),
    }
}

/// `out = 1` iff `value >= threshold`.
pub fn binarize<T: Scalar>(mask: &ProbMask<T>, threshold: T) -> BinaryMask {
    let data = mask.data().iter().map(|&v| v >= threshold).collect();
    BinaryMask::new(mask.height(), mask.width(), data).expect("same dimensions")
}

pub fn invert(mask: &BinaryMask) -> BinaryMask {
    let data = mask.data().iter().map(|&b| !b).collect();
    BinaryMask::new(mask.height(), mask.width(), data).expect("same dimensions")
}
