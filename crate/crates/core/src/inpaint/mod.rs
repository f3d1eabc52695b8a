//! The inpaint stage behind a uniform backend contract.
//!
//! Two backends exist: a deterministic harmonic (discrete Laplace) solver and
//! an HTTP client for a remote diffusion service. Prompts travel with every
//! request; only the remote backend consumes them.

mod harmonic;
mod remote;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{check_dims, BinaryMask, FillStrategy, Image};
use crate::scalar::Scalar;

pub use harmonic::HarmonicInpainter;
pub use remote::{RemoteInpainter, WireRequest, WireResponse};

/// Baseline prompt.
pub const DEFAULT_PROMPT: &str = "Remove.";

/// Inpainting prompt catalogue, `(id, text)`.
pub const PROMPTS: [(&str, &str); 10] = [
    ("P1", "Remove."),
    ("P2", "Fill in the background."),
    ("P3", "Erase the mark and restore the original."),
    ("P4", "Blend into the surrounding area."),
    ("P5", "Reconstruct the missing details."),
    ("P6", "Remove the object and match the background."),
    ("P7", "Fill in the gaps as if the mark was never there."),
    ("P8", "Smooth out and complete the scene."),
    ("P9", "Mend the area to look natural."),
    ("P10", "Restore the natural texture."),
];

/// Looks up a catalogue prompt by id (`"P3"`), falling back to the literal text.
pub fn resolve_prompt(id_or_text: &str) -> &str {
    PROMPTS
        .iter()
        .find(|(id, _)| id.eq_ignore_ascii_case(id_or_text))
        .map(|(_, text)| *text)
        .unwrap_or(id_or_text)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InpaintOptions {
    /// Pre-fill applied before the backend runs; seeds the harmonic solver.
    pub fill: FillStrategy,
    /// Stop when the max-norm of a sweep's update falls below this.
    pub tolerance: f64,
    /// Sweep cap; `None` means `10·(H + W)`.
    pub max_iterations: Option<usize>,
    /// Denoising steps forwarded to remote backends.
    pub steps: u32,
}

impl Default for InpaintOptions {
    fn default() -> Self {
        Self {
            fill: FillStrategy::AverageBackground,
            tolerance: 1e-5,
            max_iterations: None,
            steps: 50,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct InpaintRequest<'a, T> {
    pub image: &'a Image<T>,
    /// `true` marks pixels to synthesize.
    pub mask: &'a BinaryMask,
    pub prompt: &'a str,
    pub options: &'a InpaintOptions,
}

impl<'a, T: Scalar> InpaintRequest<'a, T> {
    pub fn new(
        image: &'a Image<T>,
        mask: &'a BinaryMask,
        prompt: &'a str,
        options: &'a InpaintOptions,
    ) -> Result<Self> {
        check_dims(image.dims(), mask.dims())?;
        Ok(Self {
            image,
            mask,
            prompt,
            options,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InpaintStatus {
    Converged { iterations: usize },
    /// Iteration cap reached; the image is the last iterate.
    NotConverged { iterations: usize, last_update: f64 },
    /// Every pixel was masked, so no boundary data existed; the image is the pre-fill.
    NoBoundary,
    /// Produced by a remote service.
    Remote,
}

impl InpaintStatus {
    pub fn is_warning(&self) -> bool {
        matches!(
            self,
            InpaintStatus::NotConverged { .. } | InpaintStatus::NoBoundary
        )
    }
}

#[derive(Clone, Debug)]
pub struct InpaintOutcome<T> {
    pub image: Image<T>,
    pub status: InpaintStatus,
}

/// `(image, mask, prompt, options) → image` with output dimensions equal to
/// the input and values in `[0, 1]`. Implementations are shared across
/// workers without mutation.
pub trait InpaintBackend<T: Scalar>: Send + Sync {
    fn id(&self) -> String;
    fn inpaint(&self, req: &InpaintRequest<'_, T>) -> Result<InpaintOutcome<T>>;
}

/// A backend resolved from its textual id.
#[derive(Clone, Debug)]
pub enum Backend {
    Harmonic(HarmonicInpainter),
    Remote(RemoteInpainter),
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Harmonic(_) => f.write_str("harmonic"),
            Backend::Remote(r) => write!(f, "remote:{}", r.endpoint()),
        }
    }
}

impl<T: Scalar> InpaintBackend<T> for Backend {
    fn id(&self) -> String {
        self.to_string()
    }

    fn inpaint(&self, req: &InpaintRequest<'_, T>) -> Result<InpaintOutcome<T>> {
        match self {
            Backend::Harmonic(h) => h.inpaint(req),
            Backend::Remote(r) => r.inpaint(req),
        }
    }
}

/// Resolves `"harmonic"` or `"remote:<url>"`.
pub fn select_backend(id: &str) -> Result<Backend> {
    let id = id.trim();
    if id == "harmonic" {
        return Ok(Backend::Harmonic(HarmonicInpainter));
    }
    if let Some(url) = id.strip_prefix("remote:") {
        if url.starts_with("http://") || url.starts_with("https://") {
            return Ok(Backend::Remote(RemoteInpainter::new(url)));
        }
    }
    Err(Error::UnknownBackend { id: id.to_string() })
}
