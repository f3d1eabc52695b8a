//! Scaling and rotation of alpha overlays.

use crate::raster::ImageWithAlpha;
use crate::scalar::Scalar;

/// Bounding box `(height, width)` of a `h×w` rectangle rotated by `degrees`.
pub fn rotated_extent(h: f64, w: f64, degrees: f64) -> (usize, usize) {
    let (s, c) = degrees.to_radians().sin_cos();
    let bh = (w * s.abs() + h * c.abs()).ceil().max(1.0);
    let bw = (w * c.abs() + h * s.abs()).ceil().max(1.0);
    (bh as usize, bw as usize)
}

/// Resamples `logo` to width `target_width` (aspect preserved), rotated
/// counter-clockwise by `degrees` about its centre.
///
/// Colour and alpha are interpolated bilinearly with premultiplied colour;
/// the resampled alpha is then cut at 0.5 so the overlay is exactly opaque
/// or exactly transparent at every pixel.
pub fn scale_rotate<T: Scalar>(
    logo: &ImageWithAlpha<T>,
    target_width: f64,
    degrees: f64,
) -> ImageWithAlpha<T> {
    let (lh, lw) = logo.dims();
    let factor = target_width / lw as f64;
    let (sh, sw) = (lh as f64 * factor, target_width);
    let (oh, ow) = rotated_extent(sh, sw, degrees);
    let (s, c) = degrees.to_radians().sin_cos();
    let (ocy, ocx) = (oh as f64 / 2.0, ow as f64 / 2.0);
    let (lcy, lcx) = (lh as f64 / 2.0, lw as f64 / 2.0);

    let sample = |fy: f64, fx: f64| -> ([f64; 3], f64) {
        // pixel centres sit at integer + 0.5
        let (py, px) = (fy - 0.5, fx - 0.5);
        let (y0, x0) = (py.floor(), px.floor());
        let (ty, tx) = (py - y0, px - x0);
        let mut prem = [0.0; 3];
        let mut alpha = 0.0;
        for (dy, wy) in [(0.0, 1.0 - ty), (1.0, ty)] {
            for (dx, wx) in [(0.0, 1.0 - tx), (1.0, tx)] {
                let (yy, xx) = (y0 + dy, x0 + dx);
                if yy < 0.0 || xx < 0.0 || yy >= lh as f64 || xx >= lw as f64 {
                    continue;
                }
                let (yy, xx) = (yy as usize, xx as usize);
                let a = logo.alpha_at(yy, xx).as_f64();
                let rgb = logo.rgb().pixel(yy, xx);
                let wgt = wy * wx;
                alpha += wgt * a;
                for ch in 0..3 {
                    prem[ch] += wgt * a * rgb[ch].as_f64();
                }
            }
        }
        if alpha > 0.0 {
            (prem.map(|p| p / alpha), alpha)
        } else {
            ([0.0; 3], 0.0)
        }
    };

    ImageWithAlpha::from_fn(oh, ow, |y, x| {
        let (dy, dx) = (y as f64 + 0.5 - ocy, x as f64 + 0.5 - ocx);
        // inverse rotation, then inverse scale
        let ry = c * dy + s * dx;
        let rx = -s * dy + c * dx;
        let (fy, fx) = (ry / factor + lcy, rx / factor + lcx);
        let (rgb, a) = sample(fy, fx);
        let a = if a >= 0.5 { T::one() } else { T::zero() };
        (rgb.map(T::lit), a)
    })
}
