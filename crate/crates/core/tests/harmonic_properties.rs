use morphomod::inpaint::{HarmonicInpainter, InpaintOptions, InpaintRequest, InpaintStatus};
use morphomod::raster::Image;
use morphomod::{BinaryMask, FillStrategy};
use proptest::prelude::*;

fn solve(x: &Image<f64>, m: &BinaryMask, fill: FillStrategy) -> (Image<f64>, InpaintStatus) {
    let opts = InpaintOptions { fill, ..Default::default() };
    let req = InpaintRequest::new(x, m, "", &opts).unwrap();
    let out = HarmonicInpainter.solve(&req).unwrap();
    (out.image, out.status)
}

/// 4-connected components of `m` with the unmasked 4-neighbours of each.
fn holes(m: &BinaryMask) -> Vec<(Vec<(usize, usize)>, Vec<(usize, usize)>)> {
    let (h, w) = m.dims();
    let mut seen = vec![false; h * w];
    let mut out = Vec::new();
    for start in 0..h * w {
        if seen[start] || !m.data()[start] {
            continue;
        }
        let (mut inside, mut rim, mut stack) = (Vec::new(), Vec::new(), vec![start]);
        seen[start] = true;
        while let Some(i) = stack.pop() {
            let (y, x) = (i / w, i % w);
            inside.push((y, x));
            let mut nb = Vec::new();
            if y > 0 { nb.push((y - 1, x)); }
            if y + 1 < h { nb.push((y + 1, x)); }
            if x > 0 { nb.push((y, x - 1)); }
            if x + 1 < w { nb.push((y, x + 1)); }
            for (ny, nx) in nb {
                let j = ny * w + nx;
                if !m.data()[j] {
                    rim.push((ny, nx));
                } else if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        out.push((inside, rim));
    }
    out
}

fn arb_case() -> impl Strategy<Value = (Image<f64>, BinaryMask)> {
    (3usize..14, 3usize..14).prop_flat_map(|(h, w)| {
        (
            prop::collection::vec(0.0f64..=1.0, h * w * 3),
            prop::collection::vec(prop::bool::weighted(0.35), h * w),
        )
            .prop_map(move |(px, bits)| {
                let mut bits = bits;
                bits[0] = false; // keep at least one boundary pixel
                (Image::new(h, w, px).unwrap(), BinaryMask::new(h, w, bits).unwrap())
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn maximum_principle_per_hole((x, m) in arb_case()) {
        let (out, status) = solve(&x, &m, FillStrategy::AverageBackground);
        prop_assert!(matches!(status, InpaintStatus::Converged { .. }), "{status:?}");
        for (inside, rim) in holes(&m) {
            for c in 0..3 {
                let lo = rim.iter().map(|&(y, x_)| x.pixel(y, x_)[c]).fold(f64::INFINITY, f64::min);
                let hi = rim.iter().map(|&(y, x_)| x.pixel(y, x_)[c]).fold(f64::NEG_INFINITY, f64::max);
                for &(y, x_) in &inside {
                    let v = out.pixel(y, x_)[c];
                    prop_assert!(v >= lo && v <= hi, "{v} outside [{lo}, {hi}]");
                }
            }
        }
    }

    #[test]
    fn known_pixels_untouched((x, m) in arb_case()) {
        let (out, _) = solve(&x, &m, FillStrategy::Gray);
        for y in 0..x.height() {
            for x_ in 0..x.width() {
                if !m.get(y, x_) {
                    prop_assert_eq!(out.pixel(y, x_), x.pixel(y, x_));
                }
            }
        }
    }

    #[test]
    fn prefill_only_changes_the_start((x, m) in arb_case()) {
        let tol = InpaintOptions::default().tolerance;
        let (a, _) = solve(&x, &m, FillStrategy::Black);
        let (b, _) = solve(&x, &m, FillStrategy::White);
        for (p, q) in a.data().iter().zip(b.data()) {
            prop_assert!((p - q).abs() <= 10.0 * tol, "{p} vs {q}");
        }
    }
}

#[test]
fn linear_ramp_is_reproduced() {
    let (h, w) = (24, 31);
    let x = Image::from_fn(h, w, |_, c| {
        let v = 0.1 + 0.8 * c as f64 / (w - 1) as f64;
        [v, 1.0 - v, 0.5]
    });
    let m = BinaryMask::from_fn(h, w, |y, c| (3..21).contains(&y) && (2..28).contains(&c));
    let (out, _) = solve(&x, &m, FillStrategy::Black);
    for (p, q) in out.data().iter().zip(x.data()) {
        assert!((p - q).abs() <= 1e-4, "{p} vs {q}");
    }
}

#[test]
fn constant_boundary_gives_constant_fill() {
    let x = Image::from_fn(20, 20, |y, c| {
        if (5..15).contains(&y) && (5..15).contains(&c) { [0.9, 0.0, 0.3] } else { [0.25, 0.6, 0.75] }
    });
    let m = BinaryMask::from_fn(20, 20, |y, c| (5..15).contains(&y) && (5..15).contains(&c));
    let (out, _) = solve(&x, &m, FillStrategy::White);
    for px in out.pixels() {
        for (v, want) in px.iter().zip([0.25, 0.6, 0.75]) {
            assert!((v - want).abs() <= 1e-6);
        }
    }
}
