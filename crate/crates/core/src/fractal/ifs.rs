//! Iterated-function-system fractal renderer (chaos game).

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::imgcore::{hsv_to_rgb, ImageBuffer};
use crate::rng::{splitmix64, RngStream};

pub const MIN_FRACTAL_SIZE: u32 = 16;

const WARMUP_ITERATIONS: usize = 64;
const BOUNDS_ITERATIONS: usize = 8192;
const POINTS_PER_PIXEL: usize = 6;
const MARGIN: f64 = 0.06;

#[derive(Debug, Clone, Copy)]
struct AffineMap {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    tx: f64,
    ty: f64,
    colour: f64,
}

impl AffineMap {
    #[inline]
    fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (self.a * x + self.b * y + self.tx, self.c * x + self.d * y + self.ty)
    }
}

/// Seed for the `index`-th member of a procedural set.
pub fn fractal_seed(set_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(set_seed) ^ index.wrapping_mul(0xA076_1D64_78BD_642F))
}

fn random_maps(rng: &mut RngStream) -> (Vec<AffineMap>, Vec<f64>) {
    let n = 3 + rng.index(4);
    let mut maps = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for k in 0..n {
        let theta = rng.range(0.0, TAU);
        let sx = rng.range(0.25, 0.75);
        let sy = rng.range(0.25, 0.75);
        let shear = rng.range(-0.3, 0.3);
        let (sin, cos) = theta.sin_cos();
        // Rotation times an upper-triangular scale/shear keeps every map contractive.
        let map = AffineMap {
            a: cos * sx,
            b: cos * shear - sin * sy,
            c: sin * sx,
            d: sin * shear + cos * sy,
            tx: rng.range(-1.0, 1.0),
            ty: rng.range(-1.0, 1.0),
            colour: k as f64 / (n - 1) as f64,
        };
        weights.push((map.a * map.d - map.b * map.c).abs().max(0.02));
        maps.push(map);
    }
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    let cumulative = weights
        .iter()
        .map(|w| {
            acc += w / total;
            acc
        })
        .collect();
    (maps, cumulative)
}

fn pick(cumulative: &[f64], u: f64) -> usize {
    cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1)
}

fn random_palette(rng: &mut RngStream) -> [[f32; 3]; 3] {
    let base = rng.unit();
    let step = rng.range(0.15, 0.4);
    std::array::from_fn(|k| {
        let s = rng.range(0.6, 1.0) as f32;
        let v = rng.range(0.75, 1.0) as f32;
        hsv_to_rgb((base + step * k as f64) as f32, s, v)
    })
}

fn gradient(palette: &[[f32; 3]; 3], t: f32) -> [f32; 3] {
    let (a, b, t) = if t < 0.5 {
        (palette[0], palette[1], t * 2.0)
    } else {
        (palette[1], palette[2], t * 2.0 - 1.0)
    };
    std::array::from_fn(|c| a[c] + (b[c] - a[c]) * t)
}

/// Renders a seeded IFS attractor: 3 to 6 contractive affine maps, points
/// coloured along a 3-colour palette gradient and shaded by log density.
pub fn generate_fractal(seed: u64, width: u32, height: u32) -> Result<ImageBuffer> {
    if width < MIN_FRACTAL_SIZE || height < MIN_FRACTAL_SIZE {
        return Err(Error::InvalidDimensions {
            width,
            height,
            reason: "fractals must be at least 16x16",
        });
    }
    let mut rng = RngStream::new(seed);
    let (maps, cumulative) = random_maps(&mut rng);
    let palette = random_palette(&mut rng);

    let (mut x, mut y, mut colour) = (0.0f64, 0.0f64, 0.5f64);
    let step = |rng: &mut RngStream, x: &mut f64, y: &mut f64, colour: &mut f64| {
        let map = &maps[pick(&cumulative, rng.unit())];
        (*x, *y) = map.apply(*x, *y);
        *colour = (*colour + map.colour) * 0.5;
    };
    for _ in 0..WARMUP_ITERATIONS {
        step(&mut rng, &mut x, &mut y, &mut colour);
    }

    let (mut min_x, mut max_x, mut min_y, mut max_y) = (x, x, y, y);
    let (bx, by, bc) = (x, y, colour);
    for _ in 0..BOUNDS_ITERATIONS {
        step(&mut rng, &mut x, &mut y, &mut colour);
        min_x = min_x.min(x);
        max_x = max_x.max(x);
        min_y = min_y.min(y);
        max_y = max_y.max(y);
    }
    let span_x = (max_x - min_x).max(1e-9);
    let span_y = (max_y - min_y).max(1e-9);
    // Fit the attractor into the frame, preserving aspect, with a margin.
    let scale = ((1.0 - 2.0 * MARGIN) * f64::from(width) / span_x)
        .min((1.0 - 2.0 * MARGIN) * f64::from(height) / span_y);
    let off_x = (f64::from(width) - span_x * scale) / 2.0 - min_x * scale;
    let off_y = (f64::from(height) - span_y * scale) / 2.0 - min_y * scale;

    let npix = width as usize * height as usize;
    let mut hits = vec![0u32; npix];
    let mut colour_sum = vec![0f64; npix];
    (x, y, colour) = (bx, by, bc);
    for _ in 0..npix * POINTS_PER_PIXEL {
        step(&mut rng, &mut x, &mut y, &mut colour);
        let px = x * scale + off_x;
        let py = y * scale + off_y;
        if px >= 0.0 && py >= 0.0 && px < f64::from(width) && py < f64::from(height) {
            let i = py as usize * width as usize + px as usize;
            hits[i] += 1;
            colour_sum[i] += colour;
        }
    }

    let max_hits = hits.iter().copied().max().unwrap_or(0).max(1);
    let norm = (1.0 + f64::from(max_hits)).ln();
    let mut data = Vec::with_capacity(npix * 3);
    for (&h, &cs) in hits.iter().zip(&colour_sum) {
        if h == 0 {
            data.extend([0.0f32; 3]);
            continue;
        }
        let density = ((1.0 + f64::from(h)).ln() / norm).powf(0.8) as f32;
        let rgb = gradient(&palette, (cs / f64::from(h)) as f32);
        data.extend(rgb.map(|c| (c * density).clamp(0.0, 1.0)));
    }
    Ok(ImageBuffer::from_raw_unchecked(width, height, data))
}
