//! Segment → inpaint → restore.
//!
//! The initial mask comes from a [`SegmentSource`]; refinement is
//! binarization followed by dilation. Restoration pastes the inpainted region
//! back into the untouched original: `out = x·(1 − m) + x̂·m`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Stage};
use crate::inpaint::{
    select_backend, Backend, InpaintBackend, InpaintOptions, InpaintRequest, InpaintStatus,
    DEFAULT_PROMPT,
};
use crate::morphology::{binarize, dilate, KernelShape, StructuringElement};
use crate::raster::{
    check_dims, load_prob_mask, prefill, save_mask_png, save_png, BinaryMask, FillStrategy, Image,
    ProbMask,
};
use crate::scalar::Scalar;

/// Where the initial (pre-refinement) mask comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum SegmentSource<T> {
    /// Mask PNG on disk; grayscale is read as probability.
    FromFile(PathBuf),
    /// Pixels within `tolerance` of `target` in every channel.
    Chroma { target: [T; 3], tolerance: T },
    Provided(ProbMask<T>),
}

impl<T: Scalar> SegmentSource<T> {
    pub fn initial_mask(&self, x: &Image<T>) -> Result<ProbMask<T>> {
        let (h, w) = x.dims();
        let m = match self {
            SegmentSource::FromFile(path) => load_prob_mask(path)?,
            SegmentSource::Chroma { target, tolerance } => ProbMask::from_fn(h, w, |y, xx| {
                let px = x.pixel(y, xx);
                let hit = (0..3).all(|c| (px[c] - target[c]).abs() <= *tolerance);
                if hit {
                    T::one()
                } else {
                    T::zero()
                }
            }),
            SegmentSource::Provided(m) => m.clone(),
        };
        check_dims(x.dims(), m.dims())?;
        Ok(m)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Warning {
    /// Nothing to remove: the refined mask is empty.
    EmptyMask,
    Inpaint(InpaintStatus),
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::EmptyMask => f.write_str("empty-mask"),
            Warning::Inpaint(InpaintStatus::NoBoundary) => f.write_str("no-boundary"),
            Warning::Inpaint(InpaintStatus::NotConverged { iterations, .. }) => {
                write!(f, "not-converged@{iterations}")
            }
            Warning::Inpaint(s) => write!(f, "{s:?}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Segmentation {
    /// Binarized source mask before dilation.
    pub initial: BinaryMask,
    /// Dilated mask handed to the inpainter.
    pub mask: BinaryMask,
    pub warnings: Vec<Warning>,
}

/// `dilate(binarize(initial, threshold), kernel)`.
pub fn segment<T: Scalar>(
    x: &Image<T>,
    source: &SegmentSource<T>,
    kernel: &StructuringElement,
    threshold: T,
) -> Result<Segmentation> {
    let initial = binarize(&source.initial_mask(x)?, threshold);
    let mask = dilate(&initial, kernel);
    let warnings = if mask.is_empty() {
        vec![Warning::EmptyMask]
    } else {
        Vec::new()
    };
    Ok(Segmentation {
        initial,
        mask,
        warnings,
    })
}

/// `x` where the mask is clear, `x_hat` where it is set.
pub fn restore<T: Scalar>(x: &Image<T>, m: &BinaryMask, x_hat: &Image<T>) -> Result<Image<T>> {
    check_dims(x.dims(), m.dims())?;
    check_dims(x.dims(), x_hat.dims())?;
    let data = x
        .data()
        .chunks_exact(3)
        .zip(x_hat.data().chunks_exact(3))
        .zip(m.data())
        .flat_map(|((a, b), &mm)| if mm { b } else { a }.iter().copied())
        .collect();
    Image::new(x.height(), x.width(), data)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Dilation radius `d`; the square kernel is `(2d+1)×(2d+1)`.
    pub dilation: usize,
    pub kernel: KernelShape,
    pub prompt: String,
    /// `"harmonic"` or `"remote:<url>"`.
    pub backend: String,
    /// Probability at or above which a source pixel counts as watermark.
    pub threshold: f64,
    #[serde(flatten)]
    pub inpaint: InpaintOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            dilation: 3,
            kernel: KernelShape::Square,
            prompt: DEFAULT_PROMPT.to_string(),
            backend: "harmonic".to_string(),
            threshold: 0.5,
            inpaint: InpaintOptions::default(),
        }
    }
}

impl PipelineConfig {
    pub fn fill(&self) -> FillStrategy {
        self.inpaint.fill
    }

    pub fn kernel(&self) -> StructuringElement {
        StructuringElement::new(self.dilation, self.kernel)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidParameter(format!(
                "mask threshold must lie in [0, 1], got {}",
                self.threshold
            )));
        }
        if !(self.inpaint.tolerance > 0.0) {
            return Err(Error::InvalidParameter("solver tolerance must be > 0".into()));
        }
        if self.inpaint.steps == 0 {
            return Err(Error::InvalidParameter("steps must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutput<T> {
    pub segmentation: Segmentation,
    /// Backend output `x̂` (equal to the input when nothing was masked).
    pub inpainted: Image<T>,
    pub restored: Image<T>,
    pub warnings: Vec<Warning>,
}

impl<T> PipelineOutput<T> {
    pub fn mask(&self) -> &BinaryMask {
        &self.segmentation.mask
    }
}

/// A configured pipeline bound to one backend; shareable across workers.
#[derive(Clone, Debug)]
pub struct Pipeline<B = Backend> {
    cfg: PipelineConfig,
    kernel: StructuringElement,
    backend: B,
}

impl Pipeline<Backend> {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        let backend = select_backend(&cfg.backend)?;
        Self::with_backend(cfg, backend)
    }
}

impl<B> Pipeline<B> {
    pub fn with_backend(cfg: PipelineConfig, backend: B) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            kernel: cfg.kernel(),
            cfg,
            backend,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn backend(&self) -> &B {
        &self.backend
    }

    pub fn run<T: Scalar>(&self, x: &Image<T>, source: &SegmentSource<T>) -> Result<PipelineOutput<T>>
    where
        B: InpaintBackend<T>,
    {
        let segmentation = segment(x, source, &self.kernel, T::lit(self.cfg.threshold))
            .map_err(|e| e.at(Stage::Segment))?;
        let mut warnings = segmentation.warnings.clone();
        let mask = &segmentation.mask;
        if mask.is_empty() {
            return Ok(PipelineOutput {
                inpainted: x.clone(),
                restored: x.clone(),
                segmentation,
                warnings,
            });
        }
        let fill = match self.cfg.fill() {
            // no background to average; the backend reports the missing boundary
            FillStrategy::AverageBackground if mask.is_full() => FillStrategy::Gray,
            f => f,
        };
        let filled = prefill(x, mask, fill).map_err(|e| e.at(Stage::Prefill))?;
        let req = InpaintRequest::new(&filled, mask, &self.cfg.prompt, &self.cfg.inpaint)
            .map_err(|e| e.at(Stage::Inpaint))?;
        let outcome = self.backend.inpaint(&req).map_err(|e| e.at(Stage::Inpaint))?;
        if outcome.status.is_warning() {
            warnings.push(Warning::Inpaint(outcome.status));
        }
        let restored = restore(x, mask, &outcome.image).map_err(|e| e.at(Stage::Restore))?;
        Ok(PipelineOutput {
            inpainted: outcome.image,
            restored,
            segmentation,
            warnings,
        })
    }
}

/// One-shot run resolving the backend from `cfg.backend`.
pub fn morphomod<T: Scalar>(
    x: &Image<T>,
    source: &SegmentSource<T>,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput<T>> {
    Pipeline::new(cfg.clone())?.run(x, source)
}

/// Writes `<stem>.mask.png`, `<stem>.inpainted.png` and `<stem>.restored.png`.
pub fn dump_stages<T: Scalar>(out: &PipelineOutput<T>, dir: &Path, stem: &str) -> Result<()> {
    save_mask_png(out.mask(), dir.join(format!("{stem}.mask.png")))?;
    save_png(&out.inpainted, dir.join(format!("{stem}.inpainted.png")))?;
    save_png(&out.restored, dir.join(format!("{stem}.restored.png")))
}
