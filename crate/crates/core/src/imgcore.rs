//! RGB float image buffer, PNG/JPEG I/O and resampling.
//!
//! Pixels live in `[0, 1]` as `f32` for the whole pipeline and are only
//! quantized to 8 bits when encoded. Quantization rounds half-to-even so
//! that `0.5` always becomes `128`.

use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, ImageReader, RgbImage};

use crate::error::{Error, Result};

pub const CHANNELS: usize = 3;

/// An immutable-by-convention RGB image with `f32` channels in `[0, 1]`,
/// stored row-major as `[r, g, b, r, g, b, ...]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl ImageBuffer {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self> {
        check_dims(width, height)?;
        let expected = width as usize * height as usize * CHANNELS;
        if data.len() != expected {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} needs {expected} values, got {}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidImage(format!("value {bad} outside [0, 1]")));
        }
        Ok(Self { width, height, data })
    }

    /// Constant-colour image.
    pub fn filled(width: u32, height: u32, rgb: [f32; 3]) -> Result<Self> {
        Self::from_fn(width, height, |_, _| rgb)
    }

    /// Builds an image from a per-pixel closure; values are clamped into `[0, 1]`.
    pub fn from_fn(
        width: u32,
        height: u32,
        mut f: impl FnMut(u32, u32) -> [f32; 3],
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width as usize * height as usize * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                data.extend(f(x, y).map(clamp_unit));
            }
        }
        Ok(Self { width, height, data })
    }

    pub fn from_rgb8(width: u32, height: u32, bytes: &[u8]) -> Result<Self> {
        check_dims(width, height)?;
        let expected = width as usize * height as usize * CHANNELS;
        if bytes.len() != expected {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} needs {expected} bytes, got {}",
                bytes.len()
            )));
        }
        let data = bytes.iter().map(|&b| f32::from(b) / 255.0).collect();
        Ok(Self { width, height, data })
    }

    /// Internal constructor for buffers whose values are already known to be in range.
    pub(crate) fn from_raw_unchecked(width: u32, height: u32, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), width as usize * height as usize * CHANNELS);
        debug_assert!(data.iter().all(|v| (0.0..=1.0).contains(v)));
        Self { width, height, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [f32; 3] {
        let i = (y as usize * self.width as usize + x as usize) * CHANNELS;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Applies `f` to every pixel, clamping the result.
    pub fn map_pixels(&self, mut f: impl FnMut(u32, u32, [f32; 3]) -> [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for y in 0..self.height {
            for x in 0..self.width {
                data.extend(f(x, y, self.pixel(x, y)).map(clamp_unit));
            }
        }
        Self::from_raw_unchecked(self.width, self.height, data)
    }

    /// 8-bit RGB bytes, rounding half-to-even.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize(v)).collect()
    }

    /// Snaps every channel to the nearest 8-bit level, as an encode/decode round trip would.
    pub fn quantized(&self) -> Self {
        let data = self.data.iter().map(|&v| f32::from(quantize(v)) / 255.0).collect();
        Self::from_raw_unchecked(self.width, self.height, data)
    }

    pub fn crop(&self, x0: u32, y0: u32, width: u32, height: u32) -> Result<Self> {
        check_dims(width, height)?;
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::InvalidDimensions {
                width,
                height,
                reason: "crop window exceeds the source image",
            });
        }
        let mut data = Vec::with_capacity(width as usize * height as usize * CHANNELS);
        for y in y0..y0 + height {
            let start = (y as usize * self.width as usize + x0 as usize) * CHANNELS;
            data.extend_from_slice(&self.data[start..start + width as usize * CHANNELS]);
        }
        Ok(Self::from_raw_unchecked(width, height, data))
    }

    /// Largest absolute per-channel difference between two equally sized images.
    pub fn max_abs_diff(&self, other: &Self) -> Option<f32> {
        if self.dims() != other.dims() {
            return None;
        }
        Some(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f32::max),
        )
    }
}

fn check_dims(width: u32, height: u32) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidDimensions {
            width,
            height,
            reason: "width and height must be at least 1",
        });
    }
    Ok(())
}

#[inline]
pub(crate) fn clamp_unit(v: f32) -> f32 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// Float channel to byte: `v * 255` rounded half-to-even.
#[inline]
pub fn quantize(v: f32) -> u8 {
    (clamp_unit(v) * 255.0).round_ties_even() as u8
}

#[inline]
pub(crate) fn luma([r, g, b]: [f32; 3]) -> f32 {
    0.299 * r + 0.587 * g + 0.114 * b
}

/// HSV (all components in `[0, 1]`) to RGB.
pub(crate) fn hsv_to_rgb(h: f32, s: f32, v: f32) -> [f32; 3] {
    let h6 = h.rem_euclid(1.0) * 6.0;
    let sector = h6.floor();
    let f = h6 - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    match sector as u8 {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

fn decode_dynamic(img: image::DynamicImage) -> Result<ImageBuffer> {
    let rgb = img.to_rgb8();
    ImageBuffer::from_rgb8(rgb.width(), rgb.height(), rgb.as_raw())
}

fn require_supported(format: Option<ImageFormat>, what: &str) -> Result<ImageFormat> {
    match format {
        Some(f @ (ImageFormat::Png | ImageFormat::Jpeg)) => Ok(f),
        Some(other) => Err(Error::decode(what, format!("unsupported format {other:?}"))),
        None => Err(Error::decode(what, "unrecognised image format")),
    }
}

/// Loads a PNG or JPEG as RGB. Alpha is dropped and grayscale is expanded.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let what = path.display().to_string();
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let format = require_supported(reader.format(), &what)?;
    let mut reader = reader;
    reader.set_format(format);
    let img = reader.decode().map_err(|e| Error::decode(&what, e))?;
    decode_dynamic(img)
}

/// Decodes an in-memory PNG or JPEG.
pub fn decode_image_bytes(bytes: &[u8]) -> Result<ImageBuffer> {
    let format = require_supported(image::guess_format(bytes).ok(), "image bytes")?;
    let img = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| Error::decode("image bytes", e))?;
    decode_dynamic(img)
}

pub fn encode_png(img: &ImageBuffer) -> Result<Vec<u8>> {
    let rgb = RgbImage::from_raw(img.width, img.height, img.to_rgb8())
        .expect("buffer length matches dimensions");
    let mut out = Cursor::new(Vec::new());
    rgb.write_to(&mut out, ImageFormat::Png)
        .map_err(|e| Error::InvalidImage(format!("png encoding failed: {e}")))?;
    Ok(out.into_inner())
}

/// Writes `img` as an 8-bit RGB PNG.
pub fn save_image(img: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_png(img)?;
    std::fs::write(path, bytes).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

#[inline]
fn lerp(a: f32, b: f32, t: f32) -> f32 {
    a + (b - a) * t
}

/// Source coordinate and weight for destination index `i` under pixel-centre alignment.
#[inline]
fn sample_coord(i: u32, src: u32, dst: u32) -> (usize, usize, f32) {
    let pos = ((f64::from(i) + 0.5) * f64::from(src) / f64::from(dst) - 0.5)
        .clamp(0.0, f64::from(src - 1));
    let i0 = pos.floor() as usize;
    let i1 = (i0 + 1).min(src as usize - 1);
    (i0, i1, (pos - i0 as f64) as f32)
}

/// Bilinear resize with pixel-centre alignment and edge clamping.
///
/// Resizing to the current dimensions returns an exact copy.
pub fn resize_bilinear(img: &ImageBuffer, width: u32, height: u32) -> Result<ImageBuffer> {
    check_dims(width, height)?;
    if img.dims() == (width, height) {
        return Ok(img.clone());
    }
    let cols: Vec<_> = (0..width).map(|x| sample_coord(x, img.width, width)).collect();
    let stride = img.width as usize * CHANNELS;
    let mut data = Vec::with_capacity(width as usize * height as usize * CHANNELS);
    for y in 0..height {
        let (y0, y1, fy) = sample_coord(y, img.height, height);
        let row0 = &img.data[y0 * stride..(y0 + 1) * stride];
        let row1 = &img.data[y1 * stride..(y1 + 1) * stride];
        for &(x0, x1, fx) in &cols {
            for c in 0..CHANNELS {
                let top = lerp(row0[x0 * CHANNELS + c], row0[x1 * CHANNELS + c], fx);
                let bottom = lerp(row1[x0 * CHANNELS + c], row1[x1 * CHANNELS + c], fx);
                data.push(clamp_unit(lerp(top, bottom, fy)));
            }
        }
    }
    Ok(ImageBuffer::from_raw_unchecked(width, height, data))
}

/// Scales by the smallest factor that covers `width x height`, then centre-crops.
pub fn cover_crop_resize(img: &ImageBuffer, width: u32, height: u32) -> Result<ImageBuffer> {
    check_dims(width, height)?;
    if img.dims() == (width, height) {
        return Ok(img.clone());
    }
    let scale = (f64::from(width) / f64::from(img.width))
        .max(f64::from(height) / f64::from(img.height));
    let scaled_w = ((f64::from(img.width) * scale).round() as u32).max(width);
    let scaled_h = ((f64::from(img.height) * scale).round() as u32).max(height);
    let scaled = resize_bilinear(img, scaled_w, scaled_h)?;
    scaled.crop((scaled_w - width) / 2, (scaled_h - height) / 2, width, height)
}
