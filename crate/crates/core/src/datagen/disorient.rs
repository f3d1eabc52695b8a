//! Position-coded messages: an orange box in one of four bands encodes
//! North/East/South/West. The disorientation agent reads the box, removes it
//! with the removal pipeline and re-draws it in a different band.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::rng_from_seed;
use crate::error::{Error, Result, Stage};
use crate::inpaint::InpaintBackend;
use crate::pipeline::{Pipeline, PipelineConfig, PipelineOutput, SegmentSource};
use crate::raster::{composite, BinaryMask, Image, ImageWithAlpha};
use crate::scalar::Scalar;

pub const ORANGE: [f64; 3] = [1.0, 0.55, 0.0];
/// Per-channel tolerance of the orange detector.
pub const ORANGE_TOLERANCE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    North,
    East,
    South,
    West,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::North, Label::East, Label::South, Label::West];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::North => "north",
            Label::East => "east",
            Label::South => "south",
            Label::West => "west",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown label {s:?}")))
    }
}

/// Band layout shared by the generator and the classifier.
///
/// The host is split into a 3×3 grid of cells of side `size / 3`; North and
/// South are the top- and bottom-centre cells, West and East the
/// middle-left and middle-right cells. A box always lies entirely inside its
/// cell, and classification picks the nearest cell centre.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandGeometry {
    pub size: usize,
    pub box_size: usize,
}

impl Default for BandGeometry {
    fn default() -> Self {
        Self {
            size: 256,
            box_size: 32,
        }
    }
}

impl BandGeometry {
    fn third(&self) -> usize {
        self.size / 3
    }

    /// Cell bounds `(row0, col0, row1, col1)`, half-open.
    pub fn cell(&self, label: Label) -> (usize, usize, usize, usize) {
        let (t, s) = (self.third(), self.size);
        match label {
            Label::North => (0, t, t, s - t),
            Label::South => (s - t, t, s, s - t),
            Label::West => (t, 0, s - t, t),
            Label::East => (t, s - t, s - t, s),
        }
    }

    pub fn center(&self, label: Label) -> (f64, f64) {
        let (r0, c0, r1, c1) = self.cell(label);
        ((r0 + r1) as f64 / 2.0, (c0 + c1) as f64 / 2.0)
    }

    fn validate(&self) -> Result<()> {
        if self.box_size == 0 || self.box_size > self.third() {
            return Err(Error::InvalidParameter(format!(
                "box of side {} does not fit a {}-pixel band cell",
                self.box_size,
                self.third()
            )));
        }
        Ok(())
    }

    fn random_origin(&self, rng: &mut ChaCha8Rng, label: Label) -> (usize, usize) {
        let (r0, c0, r1, c1) = self.cell(label);
        (
            rng.random_range(r0..=r1 - self.box_size),
            rng.random_range(c0..=c1 - self.box_size),
        )
    }

    fn box_overlay<T: Scalar>(&self) -> ImageWithAlpha<T> {
        ImageWithAlpha::from_fn(self.box_size, self.box_size, |_, _| {
            (ORANGE.map(T::lit), T::one())
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisorientOptions {
    pub geometry: BandGeometry,
    /// Value-noise texture instead of uniform mid-gray.
    pub textured: bool,
}

#[derive(Clone, Debug)]
pub struct DisorientSample<T> {
    pub image: Image<T>,
    pub label: Label,
    pub mask: BinaryMask,
}

fn background<T: Scalar>(rng: &mut ChaCha8Rng, size: usize, textured: bool) -> Image<T> {
    if !textured {
        return Image::filled(size, size, [T::lit(0.5); 3]);
    }
    // bilinear value noise on a 16-pixel lattice, gray in [0.35, 0.65]
    let cell = 16usize;
    let n = size / cell + 2;
    let lattice: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.35..0.65)).collect();
    Image::from_fn(size, size, |y, x| {
        let (fy, fx) = (y as f64 / cell as f64, x as f64 / cell as f64);
        let (iy, ix) = (fy as usize, fx as usize);
        let (ty, tx) = (fy - iy as f64, fx - ix as f64);
        let at = |a: usize, b: usize| lattice[a * n + b];
        let v = (1.0 - ty) * ((1.0 - tx) * at(iy, ix) + tx * at(iy, ix + 1))
            + ty * ((1.0 - tx) * at(iy + 1, ix) + tx * at(iy + 1, ix + 1));
        [T::lit(v); 3]
    })
}

/// One sample with a box in the band of `forced` or of a uniformly drawn label.
pub fn synth_disorient<T: Scalar>(
    seed: u64,
    forced: Option<Label>,
    opts: &DisorientOptions,
) -> Result<DisorientSample<T>> {
    let g = opts.geometry;
    g.validate()?;
    let mut rng = rng_from_seed(seed);
    let label = forced.unwrap_or_else(|| Label::ALL[rng.random_range(0..4)]);
    let bg = background::<T>(&mut rng, g.size, opts.textured);
    let (oy, ox) = g.random_origin(&mut rng, label);
    let image = composite(&bg, &g.box_overlay(), (oy as isize, ox as isize), T::one());
    let mask = BinaryMask::from_fn(g.size, g.size, |y, x| {
        (oy..oy + g.box_size).contains(&y) && (ox..ox + g.box_size).contains(&x)
    });
    Ok(DisorientSample { image, label, mask })
}

fn orange_source<T: Scalar>() -> SegmentSource<T> {
    SegmentSource::Chroma {
        target: ORANGE.map(T::lit),
        tolerance: T::lit(ORANGE_TOLERANCE),
    }
}

/// Reads the message: centroid of orange pixels, snapped to the nearest band centre.
pub fn classify_position<T: Scalar>(image: &Image<T>, geometry: &BandGeometry) -> Result<Label> {
    let target = ORANGE.map(T::lit);
    let tol = T::lit(ORANGE_TOLERANCE);
    let (mut sy, mut sx, mut n) = (0.0, 0.0, 0usize);
    for y in 0..image.height() {
        for x in 0..image.width() {
            let px = image.pixel(y, x);
            if (0..3).all(|c| (px[c] - target[c]).abs() <= tol) {
                sy += y as f64 + 0.5;
                sx += x as f64 + 0.5;
                n += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::NoOrangePixels);
    }
    let (cy, cx) = (sy / n as f64, sx / n as f64);
    // rescale in case the image size differs from the geometry
    let ky = geometry.size as f64 / image.height() as f64;
    let kx = geometry.size as f64 / image.width() as f64;
    let dist = |l: Label| {
        let (ly, lx) = geometry.center(l);
        (cy * ky - ly).powi(2) + (cx * kx - lx).powi(2)
    };
    Ok(Label::ALL
        .into_iter()
        .min_by(|a, b| dist(*a).total_cmp(&dist(*b)))
        .expect("four labels"))
}

#[derive(Clone, Debug)]
pub struct Disoriented<T> {
    pub image: Image<T>,
    pub old_label: Label,
    pub new_label: Label,
    /// Removal run that erased the original box.
    pub removal: PipelineOutput<T>,
}

/// Predicts the box position, removes the box, and draws a new one in a
/// band chosen uniformly among the other three.
pub fn disorient_with<T: Scalar, B: InpaintBackend<T>>(
    image: &Image<T>,
    pipeline: &Pipeline<B>,
    geometry: &BandGeometry,
    seed: u64,
) -> Result<Disoriented<T>> {
    geometry.validate()?;
    let old_label = classify_position(image, geometry).map_err(|e| e.at(Stage::Segment))?;
    let removal = pipeline.run(image, &orange_source())?;
    let mut rng = rng_from_seed(seed);
    let others: Vec<Label> = Label::ALL.into_iter().filter(|&l| l != old_label).collect();
    let new_label = others[rng.random_range(0..others.len())];
    let (oy, ox) = geometry.random_origin(&mut rng, new_label);
    // the cell layout is in geometry coordinates; scale for other sizes
    let oy = oy * image.height() / geometry.size;
    let ox = ox * image.width() / geometry.size;
    let out = composite(
        &removal.restored,
        &geometry.box_overlay(),
        (oy as isize, ox as isize),
        T::one(),
    );
    if out.dims() != image.dims() {
        return Err(Error::InvalidRaster("disoriented image changed size".into()).at(Stage::Insert));
    }
    Ok(Disoriented {
        image: out,
        old_label,
        new_label,
        removal,
    })
}

/// [`disorient_with`] using a backend id and the default removal settings
/// with dilation 1.
pub fn disorient<T: Scalar>(image: &Image<T>, backend: &str, seed: u64) -> Result<Disoriented<T>> {
    let cfg = PipelineConfig {
        dilation: 1,
        backend: backend.to_string(),
        ..Default::default()
    };
    disorient_with(image, &Pipeline::new(cfg)?, &BandGeometry::default(), seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_labels_classify_back() {
        for textured in [false, true] {
            let opts = DisorientOptions { textured, ..Default::default() };
            for label in Label::ALL {
                let s = synth_disorient::<f64>(3, Some(label), &opts).unwrap();
                assert_eq!(s.label, label);
                assert_eq!(classify_position(&s.image, &opts.geometry).unwrap(), label);
                assert_eq!(s.mask.count(), 32 * 32);
            }
        }
    }

    #[test]
    fn box_lies_inside_its_cell() {
        let g = BandGeometry::default();
        for seed in 0..50 {
            let s = synth_disorient::<f32>(seed, None, &DisorientOptions::default()).unwrap();
            let (r0, c0, r1, c1) = g.cell(s.label);
            for y in 0..256 {
                for x in 0..256 {
                    if s.mask.get(y, x) {
                        assert!((r0..r1).contains(&y) && (c0..c1).contains(&x));
                    }
                }
            }
        }
    }

    #[test]
    fn same_seed_same_sample() {
        let opts = DisorientOptions { textured: true, ..Default::default() };
        let a = synth_disorient::<f64>(42, None, &opts).unwrap();
        let b = synth_disorient::<f64>(42, None, &opts).unwrap();
        assert_eq!(a.image, b.image);
        assert_eq!(a.label, b.label);
    }

    #[test]
    fn box_free_image_has_no_orange() {
        let gray = Image::filled(256, 256, [0.5f64; 3]);
        assert!(matches!(
            classify_position(&gray, &BandGeometry::default()),
            Err(Error::NoOrangePixels)
        ));
    }

    #[test]
    fn disorient_moves_the_box() {
        let s = synth_disorient::<f64>(8, Some(Label::West), &DisorientOptions::default()).unwrap();
        let d = disorient(&s.image, "harmonic", 1).unwrap();
        assert_eq!(d.old_label, Label::West);
        assert_ne!(d.new_label, Label::West);
        assert_eq!(classify_position(&d.image, &BandGeometry::default()).unwrap(), d.new_label);
        assert!(matches!(
            classify_position(&d.removal.restored, &BandGeometry::default()),
            Err(Error::NoOrangePixels)
        ));
    }

    #[test]
    fn oversized_box_rejected() {
        let opts = DisorientOptions {
            geometry: BandGeometry { size: 64, box_size: 40 },
            textured: false,
        };
        assert!(synth_disorient::<f64>(0, None, &opts).is_err());
    }
}
