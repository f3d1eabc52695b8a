//! Seeded stand-ins for host photographs and logo artwork.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::raster::{Image, ImageWithAlpha};
use crate::scalar::Scalar;

/// Smooth, varied host image: a colour gradient, a few low-frequency waves,
/// soft blobs and faint grain.
pub fn host<T: Scalar>(rng: &mut ChaCha8Rng, height: usize, width: usize) -> Image<T> {
    let base: [f64; 3] = [rng.random_range(0.2..0.8), rng.random_range(0.2..0.8), rng.random_range(0.2..0.8)];
    let grad: [[f64; 2]; 3] = std::array::from_fn(|_| [rng.random_range(-0.25..0.25), rng.random_range(-0.25..0.25)]);
    let waves: Vec<(f64, f64, f64, f64, usize)> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.02..0.12),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0.5..4.0),
                rng.random_range(0.0..std::f64::consts::TAU),
                rng.random_range(0..3),
            )
        })
        .collect();
    let blobs: Vec<(f64, f64, f64, [f64; 3])> = (0..5)
        .map(|_| {
            (
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.05..0.25),
                [rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2)],
            )
        })
        .collect();
    let grain = rng.random_range(0.0..0.02);
    let (hf, wf) = (height as f64, width as f64);
    Image::from_fn(height, width, |y, x| {
        let (v, u) = (y as f64 / hf, x as f64 / wf);
        let mut px = [0.0; 3];
        for c in 0..3 {
            px[c] = base[c] + grad[c][0] * (v - 0.5) + grad[c][1] * (u - 0.5);
        }
        for &(amp, dir, freq, phase, ch) in &waves {
            let t = (u * dir.cos() + v * dir.sin()) * freq * std::f64::consts::TAU + phase;
            px[ch] += amp * t.sin();
        }
        for &(by, bx, r, tint) in &blobs {
            let d2 = ((v - by).powi(2) + (u - bx).powi(2)) / (r * r);
            let g = (-d2).exp();
            for c in 0..3 {
                px[c] += tint[c] * g;
            }
        }
        px.map(|p| T::lit((p + rng.random_range(-grain..=grain)).clamp(0.05, 0.95)))
    })
}

fn saturated(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let hue = rng.random_range(0.0..6.0f64);
    let f = hue.fract();
    let (hi, lo) = (rng.random_range(0.85..1.0), rng.random_range(0.0..0.15));
    let mid_up = lo + (hi - lo) * f;
    let mid_dn = hi - (hi - lo) * f;
    match hue as u32 {
        0 => [hi, mid_up, lo],
        1 => [mid_dn, hi, lo],
        2 => [lo, hi, mid_up],
        3 => [lo, mid_dn, hi],
        4 => [mid_up, lo, hi],
        _ => [hi, lo, mid_dn],
    }
}

/// Logo silhouettes. Badges and plates are dense (most of the bounding box
/// is opaque); rings are sparse.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogoKind {
    Badge,
    Plate,
    Ring,
}

/// A logo with a solid silhouette, a contrasting inner glyph pattern and a
/// transparent surround.
pub fn logo<T: Scalar>(rng: &mut ChaCha8Rng, size: usize, kind: LogoKind) -> ImageWithAlpha<T> {
    let aspect = rng.random_range(0.55..1.0);
    let (h, w) = (((size as f64) * aspect).round().max(4.0) as usize, size);
    let body = saturated(rng);
    let ink = if rng.random_bool(0.5) { [0.98, 0.98, 0.98] } else { [0.05, 0.05, 0.05] };
    let bars: Vec<(f64, f64, f64, f64)> = (0..rng.random_range(2..5))
        .map(|i| {
            let x0 = 0.2 + 0.15 * i as f64 + rng.random_range(-0.03..0.03);
            (x0, x0 + rng.random_range(0.05..0.1), rng.random_range(0.3..0.45), rng.random_range(0.55..0.7))
        })
        .collect();
    let corner = rng.random_range(0.1..0.3);
    ImageWithAlpha::from_fn(h, w, |y, x| {
        let v = (y as f64 + 0.5) / h as f64;
        let u = (x as f64 + 0.5) / w as f64;
        let (dy, dx) = (v - 0.5, u - 0.5);
        let inside = match kind {
            LogoKind::Badge => (dy * dy + dx * dx) <= 0.25,
            LogoKind::Plate => {
                let qy = (dy.abs() - (0.5 - corner)).max(0.0);
                let qx = (dx.abs() - (0.5 - corner)).max(0.0);
                qy * qy + qx * qx <= corner * corner
            }
            LogoKind::Ring => {
                let r2 = dy * dy + dx * dx;
                (0.09..=0.25).contains(&r2) || (dx.abs() < 0.06 && dy.abs() < 0.3)
            }
        };
        if !inside {
            return ([T::zero(); 3], T::zero());
        }
        let glyph = bars.iter().any(|&(a, b, top, bot)| u >= a && u < b && v >= top && v < bot);
        let c = if glyph && kind != LogoKind::Ring { ink } else { body };
        (c.map(T::lit), T::one())
    })
}
