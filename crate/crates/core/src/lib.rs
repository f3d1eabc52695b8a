//! Blind visible-watermark removal.
//!
//! A removal run has three phases: a watermark mask is obtained and widened
//! by morphological dilation ([`pipeline::segment`]), the masked region is
//! synthesized by an inpainting backend ([`inpaint`]), and the synthesized
//! region is pasted back into the untouched original ([`pipeline::restore`]).
//! Results are scored without access to a clean target ([`metrics`]).
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the common instantiations.

pub mod datagen;
pub mod error;
pub mod inpaint;
pub mod metrics;
pub mod morphology;
pub mod pipeline;
pub mod raster;
pub mod scalar;

pub use error::{Error, Result, Stage};
pub use morphology::{KernelShape, StructuringElement};
pub use raster::{BinaryMask, FillStrategy};
pub use scalar::Scalar;

pub type ImageF64 = raster::Image<f64>;
pub type ImageF32 = raster::Image<f32>;
pub type ProbMaskF64 = raster::ProbMask<f64>;
pub type ProbMaskF32 = raster::ProbMask<f32>;
pub type ImageWithAlphaF64 = raster::ImageWithAlpha<f64>;
pub type ImageWithAlphaF32 = raster::ImageWithAlpha<f32>;
pub type SegmentSourceF64 = pipeline::SegmentSource<f64>;
pub type PipelineOutputF64 = pipeline::PipelineOutput<f64>;
