//! Deterministic stand-in for an image-to-image diffusion model.
//!
//! Each prompt maps to a fixed global "filter" recipe built only from
//! per-pixel maps and small local neighbourhoods, so image structure is
//! kept. The result is mixed with the input by `strength`:
//! `out = (1 - s) * input + s * styled`.
//!
//! | prompt               | recipe                                                  |
//! |----------------------|---------------------------------------------------------|
//! | autumn               | warm channel rebalance (red up, blue down)              |
//! | snowy                | desaturate towards luma, lift toward white, cool tint   |
//! | sunset               | vertical orange-to-magenta gradient overlay             |
//! | watercolor art       | 3x3 box blur with paper-white lift                      |
//! | rainbow              | diagonal hue sweep overlay                              |
//! | aurora               | green/violet sinusoidal bands, stronger at the top      |
//! | mosaic               | 4x4 block-mean pixelation                               |
//! | ukiyo-e              | 5-level posterize, dark outlines on luma edges           |
//! | a sketch with crayon | edge strokes on warm paper with faint original colour   |
//! | anything else        | neutral tone map `v^0.9`                                |
//!
//! Recipes are frozen; any change must bump [`RECIPE_VERSION`].

use std::f32::consts::TAU;

use super::GeneratorBackend;
use crate::error::Result;
use crate::imgcore::{hsv_to_rgb, luma, ImageBuffer};

pub const RECIPE_VERSION: u32 = 1;

pub const MOSAIC_BLOCK: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Autumn,
    Snowy,
    Sunset,
    Watercolor,
    Rainbow,
    Aurora,
    Mosaic,
    UkiyoE,
    CrayonSketch,
    Neutral,
}

impl Style {
    const NAMED: [(&'static str, Style); 9] = [
        ("autumn", Style::Autumn),
        ("snowy", Style::Snowy),
        ("sunset", Style::Sunset),
        ("watercolor art", Style::Watercolor),
        ("rainbow", Style::Rainbow),
        ("aurora", Style::Aurora),
        ("mosaic", Style::Mosaic),
        ("ukiyo-e", Style::UkiyoE),
        ("a sketch with crayon", Style::CrayonSketch),
    ];

    /// Resolves a bare prompt (`"snowy"`) or a rendered instruction ending
    /// in one (`"... into snowy"`). Unknown prompts map to `Neutral`.
    pub fn resolve(prompt: &str) -> Style {
        let prompt = prompt.trim();
        Self::NAMED
            .iter()
            .filter(|(name, _)| prompt.ends_with(name))
            .max_by_key(|(name, _)| name.len())
            .map_or(Style::Neutral, |&(_, style)| style)
    }

    fn apply(self, img: &ImageBuffer) -> ImageBuffer {
        match self {
            Style::Autumn => img.map_pixels(|_, _, [r, g, b]| [r * 1.12 + 0.06, g * 0.92 + 0.03, b * 0.68]),
            Style::Snowy => img.map_pixels(|_, _, px| {
                let l = luma(px);
                let [r, g, b] = px.map(|c| 0.35 + 0.65 * (0.4 * c + 0.6 * l));
                [r, g, b + 0.03]
            }),
            Style::Sunset => {
                let h = img.height();
                img.map_pixels(|_, y, px| {
                    let t = if h > 1 { y as f32 / (h - 1) as f32 } else { 0.0 };
                    let top = [1.0, 0.45, 0.15];
                    let bottom = [0.55, 0.2, 0.35];
                    std::array::from_fn(|c| {
                        let overlay = top[c] + (bottom[c] - top[c]) * t;
                        px[c] * 0.6 + overlay * 0.4
                    })
                })
            }
            Style::Watercolor => {
                let blurred = box_blur3(img);
                blurred.map_pixels(|_, _, px| px.map(|c| 0.12 + 0.88 * c))
            }
            Style::Rainbow => {
                let (w, h) = (img.width() as f32, img.height() as f32);
                img.map_pixels(|x, y, px| {
                    let band = hsv_to_rgb(x as f32 / w + y as f32 / (2.0 * h), 0.8, 1.0);
                    std::array::from_fn(|c| 0.72 * px[c] + 0.28 * band[c])
                })
            }
            Style::Aurora => {
                let (w, h) = (img.width() as f32, img.height() as f32);
                img.map_pixels(|x, y, px| {
                    let phase = TAU * (1.5 * x as f32 / w + 0.5 * y as f32 / h);
                    let band = 0.5 + 0.5 * phase.sin();
                    let green = [0.1, 0.9, 0.5];
                    let violet = [0.55, 0.2, 0.9];
                    let weight = 0.35 * (0.4 + 0.6 * (1.0 - y as f32 / h));
                    std::array::from_fn(|c| {
                        let tint = green[c] + (violet[c] - green[c]) * band;
                        (1.0 - weight) * px[c] + weight * tint
                    })
                })
            }
            Style::Mosaic => block_mean(img, MOSAIC_BLOCK),
            Style::UkiyoE => {
                let edges = luma_edges(img);
                let w = img.width() as usize;
                img.map_pixels(|x, y, px| {
                    let e = edges[y as usize * w + x as usize];
                    let ink = 1.0 - (2.5 * e).min(1.0);
                    px.map(|c| (c * 4.0).round() / 4.0 * ink)
                })
            }
            Style::CrayonSketch => {
                let edges = luma_edges(img);
                let w = img.width() as usize;
                let paper = [0.98, 0.95, 0.88];
                img.map_pixels(|x, y, px| {
                    let e = edges[y as usize * w + x as usize];
                    let stroke = 1.0 - (3.0 * e).min(1.0);
                    std::array::from_fn(|c| stroke * (0.65 * paper[c] + 0.35 * px[c]))
                })
            }
            Style::Neutral => img.map_pixels(|_, _, px| px.map(|c| c.powf(0.9))),
        }
    }
}

fn box_blur3(img: &ImageBuffer) -> ImageBuffer {
    let (w, h) = (img.width() as i64, img.height() as i64);
    img.map_pixels(|x, y, _| {
        let mut acc = [0.0f32; 3];
        let mut n = 0.0;
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (sx, sy) = (x as i64 + dx, y as i64 + dy);
                if (0..w).contains(&sx) && (0..h).contains(&sy) {
                    let p = img.pixel(sx as u32, sy as u32);
                    for c in 0..3 {
                        acc[c] += p[c];
                    }
                    n += 1.0;
                }
            }
        }
        acc.map(|v| v / n)
    })
}

/// Every `block x block` tile (clipped at the borders) replaced by its mean.
fn block_mean(img: &ImageBuffer, block: u32) -> ImageBuffer {
    let (w, h) = img.dims();
    let tiles_x = w.div_ceil(block) as usize;
    let mut means = vec![[0.0f32; 3]; tiles_x * h.div_ceil(block) as usize];
    for ty in 0..h.div_ceil(block) {
        for tx in 0..w.div_ceil(block) {
            let mut acc = [0.0f32; 3];
            let mut n = 0.0;
            for y in ty * block..((ty + 1) * block).min(h) {
                for x in tx * block..((tx + 1) * block).min(w) {
                    let p = img.pixel(x, y);
                    for c in 0..3 {
                        acc[c] += p[c];
                    }
                    n += 1.0;
                }
            }
            means[ty as usize * tiles_x + tx as usize] = acc.map(|v| v / n);
        }
    }
    img.map_pixels(|x, y, _| means[(y / block) as usize * tiles_x + (x / block) as usize])
}

/// Central-difference gradient magnitude of luma, clamped at borders.
fn luma_edges(img: &ImageBuffer) -> Vec<f32> {
    let (w, h) = img.dims();
    let l = |x: i64, y: i64| {
        let x = x.clamp(0, i64::from(w) - 1) as u32;
        let y = y.clamp(0, i64::from(h) - 1) as u32;
        luma(img.pixel(x, y))
    };
    let mut out = Vec::with_capacity(img.pixel_count());
    for y in 0..i64::from(h) {
        for x in 0..i64::from(w) {
            let gx = l(x + 1, y) - l(x - 1, y);
            let gy = l(x, y + 1) - l(x, y - 1);
            out.push(0.5 * (gx * gx + gy * gy).sqrt());
        }
    }
    out
}

/// Applies the recipe for `prompt` at `strength` (clamped to `[0, 1]`).
/// Strength 0 returns the input unchanged.
pub fn procedural_stylize(img: &ImageBuffer, prompt: &str, strength: f32) -> ImageBuffer {
    let s = if strength.is_nan() { 0.0 } else { strength.clamp(0.0, 1.0) };
    if s == 0.0 {
        return img.clone();
    }
    let styled = Style::resolve(prompt).apply(img);
    if s == 1.0 {
        return styled;
    }
    let data: Vec<f32> = img
        .as_slice()
        .iter()
        .zip(styled.as_slice())
        .map(|(&a, &b)| ((1.0 - s) * a + s * b).clamp(0.0, 1.0))
        .collect();
    ImageBuffer::from_raw_unchecked(img.width(), img.height(), data)
}

#[derive(Debug, Clone)]
pub struct ProceduralBackend {
    strength: f32,
    id: String,
}

impl ProceduralBackend {
    pub fn new(strength: f32) -> Self {
        let strength = if strength.is_nan() { 0.0 } else { strength.clamp(0.0, 1.0) };
        Self {
            strength,
            id: format!("procedural-v{RECIPE_VERSION}:strength={strength}"),
        }
    }

    pub fn strength(&self) -> f32 {
        self.strength
    }
}

impl Default for ProceduralBackend {
    fn default() -> Self {
        Self::new(1.0)
    }
}

impl GeneratorBackend for ProceduralBackend {
    fn backend_id(&self) -> &str {
        &self.id
    }

    fn generate(&self, image: &ImageBuffer, rendered_prompt: &str) -> Result<ImageBuffer> {
        Ok(procedural_stylize(image, rendered_prompt, self.strength))
    }
}
