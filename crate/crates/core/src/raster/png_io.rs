//! PNG encode/decode. 8-bit and 16-bit channels map linearly onto `[0, 1]`.

use std::fs::File;
use std::io::{BufWriter, Cursor, Write};
use std::path::Path;

use png::{BitDepth, ColorType, Transformations};

use super::{BinaryMask, Image, ImageWithAlpha, ProbMask};
use crate::error::{Error, Result};
use crate::morphology::binarize;
use crate::scalar::Scalar;

/// A decoded PNG: alpha is kept only when the file carries it.
#[derive(Clone, Debug, PartialEq)]
pub enum Decoded<T> {
    Rgb(Image<T>),
    Rgba(ImageWithAlpha<T>),
}

impl<T: Scalar> Decoded<T> {
    /// Drops the alpha plane if present.
    pub fn into_image(self) -> Image<T> {
        match self {
            Decoded::Rgb(img) => img,
            Decoded::Rgba(img) => img.into_image(),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            Decoded::Rgb(img) => img.dims(),
            Decoded::Rgba(img) => img.dims(),
        }
    }
}

struct RawPng {
    height: usize,
    width: usize,
    color: ColorType,
    /// Samples normalized to [0, 1], `channels` per pixel.
    samples: Vec<f64>,
}

impl RawPng {
    fn channels(&self) -> usize {
        self.color.samples()
    }
}

fn malformed(e: png::DecodingError) -> Error {
    match e {
        png::DecodingError::IoError(io) => Error::MalformedPng(io.to_string()),
        other => Error::MalformedPng(other.to_string()),
    }
}

fn decode_raw(bytes: &[u8]) -> Result<RawPng> {
    let mut decoder = png::Decoder::new(Cursor::new(bytes));
    decoder.set_transformations(Transformations::EXPAND);
    let mut reader = decoder.read_info().map_err(malformed)?;
    {
        let info = reader.info();
        if info.color_type != ColorType::Indexed
            && !matches!(info.bit_depth, BitDepth::Eight | BitDepth::Sixteen)
        {
            return Err(Error::UnsupportedBitDepth(info.bit_depth as u8));
        }
    }
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::MalformedPng("image too large".into()))?;
    let mut buf = vec![0u8; size];
    let out = reader.next_frame(&mut buf).map_err(malformed)?;
    let (height, width) = (out.height as usize, out.width as usize);
    let channels = out.color_type.samples();
    let row_samples = width * channels;
    let mut samples = Vec::with_capacity(height * row_samples);
    for row in buf.chunks(out.line_size).take(height) {
        match out.bit_depth {
            BitDepth::Eight => samples.extend(row[..row_samples].iter().map(|&b| b as f64 / 255.0)),
            BitDepth::Sixteen => samples.extend(
                row[..row_samples * 2]
                    .chunks_exact(2)
                    .map(|b| u16::from_be_bytes([b[0], b[1]]) as f64 / 65535.0),
            ),
            other => return Err(Error::UnsupportedBitDepth(other as u8)),
        }
    }
    Ok(RawPng {
        height,
        width,
        color: out.color_type,
        samples,
    })
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Decodes PNG bytes. Grayscale expands to RGB; alpha is preserved when present.
pub fn decode_png<T: Scalar>(bytes: &[u8]) -> Result<Decoded<T>> {
    let raw = decode_raw(bytes)?;
    let ch = raw.channels();
    let px = |i: usize| -> [T; 3] {
        let s = &raw.samples[i * ch..];
        match raw.color {
            ColorType::Grayscale | ColorType::GrayscaleAlpha => [T::lit(s[0]); 3],
            _ => [T::lit(s[0]), T::lit(s[1]), T::lit(s[2])],
        }
    };
    let idx = |y: usize, x: usize| y * raw.width + x;
    match raw.color {
        ColorType::Grayscale | ColorType::Rgb => Ok(Decoded::Rgb(Image::from_fn(
            raw.height,
            raw.width,
            |y, x| px(idx(y, x)),
        ))),
        ColorType::GrayscaleAlpha | ColorType::Rgba => Ok(Decoded::Rgba(ImageWithAlpha::from_fn(
            raw.height,
            raw.width,
            |y, x| {
                let i = idx(y, x);
                (px(i), T::lit(raw.samples[i * ch + ch - 1]))
            },
        ))),
        ColorType::Indexed => Err(Error::MalformedPng("palette was not expanded".into())),
    }
}

pub fn load_png<T: Scalar>(path: impl AsRef<Path>) -> Result<Decoded<T>> {
    decode_png(&read_file(path.as_ref())?)
}

/// Loads a PNG as RGB, discarding alpha.
pub fn load_image<T: Scalar>(path: impl AsRef<Path>) -> Result<Image<T>> {
    load_png(path).map(Decoded::into_image)
}

/// Loads a mask PNG. Grayscale values are used directly; colour inputs are
/// reduced to Rec. 601 luminance. Alpha is ignored.
pub fn load_prob_mask<T: Scalar>(path: impl AsRef<Path>) -> Result<ProbMask<T>> {
    let raw = decode_raw(&read_file(path.as_ref())?)?;
    let ch = raw.channels();
    let data = raw
        .samples
        .chunks_exact(ch)
        .map(|s| match raw.color {
            ColorType::Grayscale | ColorType::GrayscaleAlpha => T::lit(s[0]),
            _ => T::lit(0.299 * s[0] + 0.587 * s[1] + 0.114 * s[2]).clamp_unit(),
        })
        .collect();
    ProbMask::new(raw.height, raw.width, data)
}

/// Loads a mask PNG and binarizes at 0.5.
pub fn load_binary_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    Ok(binarize(&load_prob_mask::<f64>(path)?, 0.5))
}

#[inline]
fn quantize<T: Scalar>(v: T) -> u8 {
    (v.clamp_unit().as_f64() * 255.0).round() as u8
}

fn encode_raw(width: usize, height: usize, color: ColorType, data: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, width as u32, height as u32);
        encoder.set_color(color);
        encoder.set_depth(BitDepth::Eight);
        let mut writer = encoder
            .write_header()
            .map_err(|e| Error::Encode(e.to_string()))?;
        writer
            .write_image_data(data)
            .map_err(|e| Error::Encode(e.to_string()))?;
        writer.finish().map_err(|e| Error::Encode(e.to_string()))?;
    }
    Ok(out)
}

/// 8-bit RGB PNG bytes.
pub fn encode_png<T: Scalar>(image: &Image<T>) -> Result<Vec<u8>> {
    let bytes: Vec<u8> = image.data().iter().map(|&v| quantize(v)).collect();
    encode_raw(image.width(), image.height(), ColorType::Rgb, &bytes)
}

/// Single-channel 8-bit PNG bytes, 0 = background, 255 = watermark.
pub fn encode_mask_png(mask: &BinaryMask) -> Result<Vec<u8>> {
    let bytes: Vec<u8> = mask.data().iter().map(|&b| if b { 255 } else { 0 }).collect();
    encode_raw(mask.width(), mask.height(), ColorType::Grayscale, &bytes)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn save_png<T: Scalar>(image: &Image<T>, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_png(image)?)
}

pub fn save_rgba_png<T: Scalar>(image: &ImageWithAlpha<T>, path: impl AsRef<Path>) -> Result<()> {
    let (h, w) = image.dims();
    let mut bytes = Vec::with_capacity(h * w * 4);
    for (px, &a) in image.rgb().pixels().zip(image.alpha()) {
        bytes.extend(px.iter().map(|&v| quantize(v)));
        bytes.push(quantize(a));
    }
    write_file(path.as_ref(), &encode_raw(w, h, ColorType::Rgba, &bytes)?)
}

pub fn save_mask_png(mask: &BinaryMask, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_mask_png(mask)?)
}

pub fn save_prob_mask_png<T: Scalar>(mask: &ProbMask<T>, path: impl AsRef<Path>) -> Result<()> {
    let bytes: Vec<u8> = mask.data().iter().map(|&v| quantize(v)).collect();
    write_file(
        path.as_ref(),
        &encode_raw(mask.width(), mask.height(), ColorType::Grayscale, &bytes)?,
    )
}
