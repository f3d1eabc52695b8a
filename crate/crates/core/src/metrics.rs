//! Blind removal metrics.
//!
//! Watermark-removal (WR) scores compare the watermarked input with the output
//! inside the ground-truth mask; semantic-preservation (SP) scores compare the
//! two over the background `x·(1 − m)`. A successful removal shows high
//! `rmse_w`, low `ssim_w`, and background scores near identity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::morphology::invert;
use crate::raster::{check_dims, BinaryMask, Image, ProbMask};
use crate::scalar::Scalar;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;
/// Probability clamp for the BCE/Dice mask scores.
pub const MASK_EPS: f64 = 1e-7;

fn nonempty(region: &BinaryMask, what: &'static str) -> Result<()> {
    if region.is_empty() {
        Err(Error::EmptyRegion(what))
    } else {
        Ok(())
    }
}

/// Root mean squared difference over every (pixel, channel) where `region` is set.
pub fn rmse_region<T: Scalar>(a: &Image<T>, b: &Image<T>, region: &BinaryMask) -> Result<T> {
    check_dims(a.dims(), b.dims())?;
    check_dims(a.dims(), region.dims())?;
    nonempty(region, "rmse region")?;
    let mut sum = T::zero();
    for ((pa, pb), &m) in a.pixels().zip(b.pixels()).zip(region.data()) {
        if m {
            for c in 0..3 {
                let d = pa[c] - pb[c];
                sum = sum + d * d;
            }
        }
    }
    Ok((sum / T::from_count(region.count() * 3)).sqrt())
}

fn gaussian_taps<T: Scalar>() -> Vec<T> {
    let r = (SSIM_WINDOW / 2) as i64;
    let raw: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|v| T::lit(v / total)).collect()
}

/// Mirror index about the edge sample (`… c b | a b c …`).
#[inline]
pub(crate) fn mirror(i: isize, n: usize) -> usize {
    let n = n as isize;
    let j = if i < 0 {
        -i
    } else if i >= n {
        2 * (n - 1) - i
    } else {
        i
    };
    j as usize
}

fn blur<T: Scalar>(plane: &[T], h: usize, w: usize, taps: &[T]) -> Vec<T> {
    let r = (taps.len() / 2) as isize;
    let mut tmp = vec![T::zero(); h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = T::zero();
            for (k, &t) in taps.iter().enumerate() {
                acc = acc + t * plane[y * w + mirror(x as isize + k as isize - r, w)];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![T::zero(); h * w];
    for y in 0..h {
        for x in 0..w {
            let mut acc = T::zero();
            for (k, &t) in taps.iter().enumerate() {
                acc = acc + t * tmp[mirror(y as isize + k as isize - r, h) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Per-pixel SSIM (11×11 Gaussian window, σ = 1.5, unit dynamic range,
/// mirrored borders), averaged over the three channels.
pub fn ssim_map<T: Scalar>(a: &Image<T>, b: &Image<T>) -> Result<Vec<T>> {
    check_dims(a.dims(), b.dims())?;
    let (h, w) = a.dims();
    if h < SSIM_WINDOW || w < SSIM_WINDOW {
        return Err(Error::ImageTooSmall {
            height: h,
            width: w,
            window: SSIM_WINDOW,
        });
    }
    let taps = gaussian_taps::<T>();
    let c1 = T::lit(SSIM_K1 * SSIM_K1);
    let c2 = T::lit(SSIM_K2 * SSIM_K2);
    let two = T::lit(2.0);
    let third = T::lit(1.0 / 3.0);
    let mut map = vec![T::zero(); h * w];
    for c in 0..3 {
        let pa = a.channel(c);
        let pb = b.channel(c);
        let aa: Vec<T> = pa.iter().map(|&v| v * v).collect();
        let bb: Vec<T> = pb.iter().map(|&v| v * v).collect();
        let ab: Vec<T> = pa.iter().zip(&pb).map(|(&u, &v)| u * v).collect();
        let mu_a = blur(&pa, h, w, &taps);
        let mu_b = blur(&pb, h, w, &taps);
        let e_aa = blur(&aa, h, w, &taps);
        let e_bb = blur(&bb, h, w, &taps);
        let e_ab = blur(&ab, h, w, &taps);
        for i in 0..h * w {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let var_a = e_aa[i] - ma * ma;
            let var_b = e_bb[i] - mb * mb;
            let cov = e_ab[i] - ma * mb;
            let s = ((two * ma * mb + c1) * (two * cov + c2))
                / ((ma * ma + mb * mb + c1) * (var_a + var_b + c2));
            map[i] = map[i] + s * third;
        }
    }
    Ok(map)
}

/// Mean of the SSIM map over pixels where `region` is set.
pub fn ssim_region<T: Scalar>(a: &Image<T>, b: &Image<T>, region: &BinaryMask) -> Result<T> {
    check_dims(a.dims(), region.dims())?;
    nonempty(region, "ssim region")?;
    let map = ssim_map(a, b)?;
    let sum: T = map
        .iter()
        .zip(region.data())
        .filter(|(_, &m)| m)
        .map(|(&v, _)| v)
        .sum();
    Ok(sum / T::from_count(region.count()))
}

/// `x` with pixels under `region` zeroed.
fn keep_only<T: Scalar>(x: &Image<T>, region: &BinaryMask) -> Image<T> {
    let mut out = x.clone();
    for y in 0..x.height() {
        for xx in 0..x.width() {
            if !region.get(y, xx) {
                out.set_pixel(y, xx, [T::zero(); 3]);
            }
        }
    }
    out
}

/// Background `x·(1 − m)` and its region `1 − m`.
pub fn background_of<T: Scalar>(x: &Image<T>, m: &BinaryMask) -> Result<(Image<T>, BinaryMask)> {
    check_dims(x.dims(), m.dims())?;
    let region = invert(m);
    Ok((keep_only(x, &region), region))
}

fn overlap(pred: &BinaryMask, gt: &BinaryMask) -> Result<(usize, usize, usize)> {
    check_dims(gt.dims(), pred.dims())?;
    let inter = pred
        .data()
        .iter()
        .zip(gt.data())
        .filter(|(&p, &g)| p && g)
        .count();
    Ok((inter, pred.count(), gt.count()))
}

/// Intersection over union; two empty masks score 1.
pub fn iou(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    let (inter, p, g) = overlap(pred, gt)?;
    let union = p + g - inter;
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

/// F1 (Dice coefficient) of two hard masks; two empty masks score 1.
pub fn f1(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    let (inter, p, g) = overlap(pred, gt)?;
    Ok(if p + g == 0 {
        1.0
    } else {
        2.0 * inter as f64 / (p + g) as f64
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiceBce<T> {
    pub dice_loss: T,
    pub bce_loss: T,
    pub total: T,
}

/// Dice + binary cross-entropy of a soft prediction against a hard mask.
pub fn dice_bce<T: Scalar>(pred: &ProbMask<T>, gt: &BinaryMask) -> Result<DiceBce<T>> {
    check_dims(gt.dims(), pred.dims())?;
    let eps = T::lit(MASK_EPS);
    let hi = T::one() - eps;
    let (mut inter, mut sum_p, mut sum_g, mut bce) = (T::zero(), T::zero(), T::zero(), T::zero());
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        let p = p.max(eps).min(hi);
        if g {
            inter = inter + p;
            sum_g = sum_g + T::one();
            bce = bce - p.ln();
        } else {
            bce = bce - (T::one() - p).ln();
        }
        sum_p = sum_p + p;
    }
    let dice_loss = T::one() - T::lit(2.0) * inter / (sum_p + sum_g + eps);
    let bce_loss = bce / T::from_count(pred.data().len().max(1));
    Ok(DiceBce {
        dice_loss,
        bce_loss,
        total: dice_loss + bce_loss,
    })
}

/// One row of blind metrics. Perceptual slots are filled by external tools.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rmse_w: f64,
    pub ssim_w: f64,
    pub rmse_t: f64,
    pub ssim_t: f64,
    pub iou: Option<f64>,
    pub f1: Option<f64>,
    pub dice_loss: Option<f64>,
    pub bce_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lpips_w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lpips_t: Option<f64>,
}

/// WR scores over the watermark region, computed on `x·m` so that background
/// edits cannot leak into them.
pub fn removal_scores<T: Scalar>(x_wm: &Image<T>, x_out: &Image<T>, gt: &BinaryMask) -> Result<(T, T)> {
    check_dims(x_wm.dims(), gt.dims())?;
    let rmse = rmse_region(x_wm, x_out, gt)?;
    let ssim = ssim_region(&keep_only(x_wm, gt), &keep_only(x_out, gt), gt)?;
    Ok((rmse, ssim))
}

/// SP scores over the background region `1 − m`.
pub fn preservation_scores<T: Scalar>(
    x_wm: &Image<T>,
    x_out: &Image<T>,
    gt: &BinaryMask,
) -> Result<(T, T)> {
    let (bg_wm, region) = background_of(x_wm, gt)?;
    let (bg_out, _) = background_of(x_out, gt)?;
    let rmse = rmse_region(&bg_wm, &bg_out, &region)?;
    let ssim = ssim_region(&bg_wm, &bg_out, &region)?;
    Ok((rmse, ssim))
}

/// Mask-quality scores of a predicted hard mask.
pub fn mask_scores(pred: &BinaryMask, gt: &BinaryMask) -> Result<(f64, f64, DiceBce<f64>)> {
    Ok((
        iou(pred, gt)?,
        f1(pred, gt)?,
        dice_bce(&ProbMask::<f64>::from(pred), gt)?,
    ))
}

pub fn report<T: Scalar>(
    x_wm: &Image<T>,
    x_out: &Image<T>,
    gt_mask: &BinaryMask,
    pred_mask: Option<&BinaryMask>,
) -> Result<MetricsReport> {
    check_dims(x_wm.dims(), x_out.dims())?;
    let (rmse_w, ssim_w) = removal_scores(x_wm, x_out, gt_mask)?;
    let (rmse_t, ssim_t) = preservation_scores(x_wm, x_out, gt_mask)?;
    let mut r = MetricsReport {
        rmse_w: rmse_w.as_f64(),
        ssim_w: ssim_w.as_f64(),
        rmse_t: rmse_t.as_f64(),
        ssim_t: ssim_t.as_f64(),
        ..Default::default()
    };
    if let Some(pred) = pred_mask {
        let (i, f, db) = mask_scores(pred, gt_mask)?;
        r.iou = Some(i);
        r.f1 = Some(f);
        r.dice_loss = Some(db.dice_loss);
        r.bce_loss = Some(db.bce_loss);
    }
    Ok(r)
}
