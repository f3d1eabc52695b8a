//! Synthetic watermark datasets with exact ground-truth masks.
//!
//! Every generator is a pure function of its inputs and a seed. Batch
//! generation derives one independent stream per sample from
//! `(master seed, index)`, so output does not depend on worker scheduling.

mod disorient;
mod manifest;
pub mod procedural;
mod transform;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{composite, BinaryMask, Image, ImageWithAlpha};
use crate::scalar::Scalar;

pub use disorient::{
    classify_position, disorient, disorient_with, BandGeometry, Disoriented, DisorientOptions,
    DisorientSample, Label, ORANGE, ORANGE_TOLERANCE, synth_disorient,
};
pub use manifest::{DatasetLayout, DatasetManifest, ManifestEntry, Recipe};
pub use transform::{rotated_extent, scale_rotate};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the `index`-th sample of a batch.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index.wrapping_add(1)))
}

/// Placement of one watermark on a host.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WatermarkSpec {
    /// Logo width as a fraction of the host width, before rotation.
    pub scale: f64,
    /// Top-left `(row, col)` of the rotated logo's bounding box.
    pub position: (isize, isize),
    /// Counter-clockwise rotation in degrees.
    pub rotation: f64,
    pub opacity: f64,
}

#[derive(Clone, Debug)]
pub struct WatermarkedSample<T> {
    pub image: Image<T>,
    pub mask: BinaryMask,
    pub spec: WatermarkSpec,
}

fn check_spec(spec: &WatermarkSpec) -> Result<()> {
    if !(spec.scale > 0.0) {
        return Err(Error::InvalidParameter(format!("scale must be > 0, got {}", spec.scale)));
    }
    if !(0.0..=1.0).contains(&spec.opacity) {
        return Err(Error::InvalidParameter(format!(
            "opacity must lie in [0, 1], got {}",
            spec.opacity
        )));
    }
    Ok(())
}

/// Placed overlay plus the set of host pixels it covers with alpha > 0.
fn place<T: Scalar>(
    host: &Image<T>,
    overlay: &ImageWithAlpha<T>,
    origin: (isize, isize),
) -> BinaryMask {
    let (oh, ow) = overlay.dims();
    BinaryMask::from_fn(host.height(), host.width(), |y, x| {
        let (ly, lx) = (y as isize - origin.0, x as isize - origin.1);
        ly >= 0
            && lx >= 0
            && (ly as usize) < oh
            && (lx as usize) < ow
            && overlay.alpha_at(ly as usize, lx as usize) > T::zero()
    })
}

/// Composites `logo` onto `host` as described by `spec`.
pub fn apply_watermark<T: Scalar>(
    host: &Image<T>,
    logo: &ImageWithAlpha<T>,
    spec: &WatermarkSpec,
) -> Result<(Image<T>, BinaryMask)> {
    check_spec(spec)?;
    let overlay = scale_rotate(logo, spec.scale * host.width() as f64, spec.rotation);
    let image = composite(host, &overlay, spec.position, T::lit(spec.opacity));
    let mask = place(host, &overlay, spec.position);
    Ok((image, mask))
}

fn random_position(
    rng: &mut ChaCha8Rng,
    host: (usize, usize),
    extent: (usize, usize),
) -> Result<(isize, isize)> {
    if extent.0 > host.0 || extent.1 > host.1 {
        return Err(Error::LogoTooLarge(format!(
            "{}x{} overlay on a {}x{} host",
            extent.0, extent.1, host.0, host.1
        )));
    }
    Ok((
        rng.random_range(0..=host.0 - extent.0) as isize,
        rng.random_range(0..=host.1 - extent.1) as isize,
    ))
}

fn sample_range(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo >= hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Ranges for transparent, randomly placed watermarks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClwdRecipe {
    pub opacity: (f64, f64),
    pub scale: (f64, f64),
    pub rotation: (f64, f64),
}

impl Default for ClwdRecipe {
    fn default() -> Self {
        Self {
            opacity: (0.3, 0.7),
            scale: (0.25, 0.6),
            rotation: (-45.0, 45.0),
        }
    }
}

/// Transparent watermark with opacity, scale, rotation and position drawn
/// uniformly from `recipe`.
pub fn synth_clwd_like<T: Scalar>(
    host: &Image<T>,
    logo: &ImageWithAlpha<T>,
    seed: u64,
    recipe: &ClwdRecipe,
) -> Result<WatermarkedSample<T>> {
    let mut rng = rng_from_seed(seed);
    let opacity = sample_range(&mut rng, recipe.opacity);
    let scale = sample_range(&mut rng, recipe.scale);
    let rotation = sample_range(&mut rng, recipe.rotation);
    let (lh, lw) = logo.dims();
    let width = scale * host.width() as f64;
    let extent = rotated_extent(lh as f64 * width / lw as f64, width, rotation);
    let position = random_position(&mut rng, host.dims(), extent)?;
    let spec = WatermarkSpec {
        scale,
        position,
        rotation,
        opacity,
    };
    let (image, mask) = apply_watermark(host, logo, &spec)?;
    Ok(WatermarkedSample { image, mask, spec })
}

/// Opaque-watermark coverage targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Alpha1Variant {
    /// 6% of the image area.
    Small,
    /// 35% of the image area.
    Large,
}

impl Alpha1Variant {
    pub fn target(self) -> f64 {
        match self {
            Alpha1Variant::Small => 0.06,
            Alpha1Variant::Large => 0.35,
        }
    }

    /// Accepted absolute deviation from [`Self::target`].
    pub fn tolerance(self) -> f64 {
        match self {
            Alpha1Variant::Small => 0.01,
            Alpha1Variant::Large => 0.02,
        }
    }
}

/// Rotation range for opaque watermarks, degrees.
pub const ALPHA1_ROTATION: (f64, f64) = (-15.0, 15.0);

/// Fully opaque watermark scaled so its mask covers the variant's target
/// fraction of the host.
pub fn synth_alpha1<T: Scalar>(
    host: &Image<T>,
    logo: &ImageWithAlpha<T>,
    variant: Alpha1Variant,
    seed: u64,
) -> Result<WatermarkedSample<T>> {
    let mut rng = rng_from_seed(seed);
    let rotation = sample_range(&mut rng, ALPHA1_ROTATION);
    let (hh, hw) = host.dims();
    let (lh, lw) = logo.dims();
    let area = (hh * hw) as f64;
    let target = variant.target();
    let extent = |scale: f64| {
        let w = scale * hw as f64;
        rotated_extent(lh as f64 * w / lw as f64, w, rotation)
    };
    let coverage = |scale: f64| {
        let o = scale_rotate(logo, scale * hw as f64, rotation);
        o.alpha().iter().filter(|&&a| a > T::zero()).count() as f64 / area
    };

    // largest scale whose rotated box still fits
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let (eh, ew) = extent(mid);
        if eh <= hh && ew <= hw {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let max_scale = lo;

    let (mut lo, mut hi) = (0.0, max_scale);
    let mut best = (f64::INFINITY, max_scale, coverage(max_scale));
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        let cov = coverage(mid);
        if (cov - target).abs() < best.0 {
            best = ((cov - target).abs(), mid, cov);
        }
        if cov < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (err, scale, achieved) = best;
    if err > variant.tolerance() {
        return Err(Error::CoverageUnattainable { target, achieved });
    }
    let position = random_position(&mut rng, host.dims(), extent(scale))?;
    let spec = WatermarkSpec {
        scale,
        position,
        rotation,
        opacity: 1.0,
    };
    let (image, mask) = apply_watermark(host, logo, &spec)?;
    Ok(WatermarkedSample { image, mask, spec })
}
