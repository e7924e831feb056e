//! Half-plane binary masks and masked concatenation.
//!
//! A mask value of 1 selects the generated image and 0 selects the
//! original: `H = G * M + I * (1 - M)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgcore::{ImageBuffer, CHANNELS};
use crate::rng::RngStream;

/// Which half of the frame is "on" (taken from the generated image).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskKind {
    LeftOn,
    RightOn,
    TopOn,
    BottomOn,
}

impl MaskKind {
    pub const ALL: [MaskKind; 4] = [
        MaskKind::LeftOn,
        MaskKind::RightOn,
        MaskKind::TopOn,
        MaskKind::BottomOn,
    ];

    /// The complementary half.
    pub fn flip(self) -> Self {
        match self {
            MaskKind::LeftOn => MaskKind::RightOn,
            MaskKind::RightOn => MaskKind::LeftOn,
            MaskKind::TopOn => MaskKind::BottomOn,
            MaskKind::BottomOn => MaskKind::TopOn,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MaskKind::LeftOn => "left_on",
            MaskKind::RightOn => "right_on",
            MaskKind::TopOn => "top_on",
            MaskKind::BottomOn => "bottom_on",
        }
    }
}

impl fmt::Display for MaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MaskKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown mask kind {s:?}")))
    }
}

/// The configurable mask family: vertical split only, vertical and
/// horizontal, or both plus their flipped counterparts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskSet {
    Vertical,
    VerticalHorizontal,
    #[default]
    Full,
}

impl MaskSet {
    pub fn kinds(self) -> &'static [MaskKind] {
        match self {
            MaskSet::Vertical => &[MaskKind::LeftOn],
            MaskSet::VerticalHorizontal => &[MaskKind::LeftOn, MaskKind::TopOn],
            MaskSet::Full => &MaskKind::ALL,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MaskSet::Vertical => "vertical",
            MaskSet::VerticalHorizontal => "vertical_horizontal",
            MaskSet::Full => "full",
        }
    }

    pub fn sample(self, rng: &mut RngStream) -> MaskKind {
        *rng.choose(self.kinds())
    }
}

impl fmt::Display for MaskSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaskSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vertical" => Ok(MaskSet::Vertical),
            "vertical_horizontal" => Ok(MaskSet::VerticalHorizontal),
            "full" => Ok(MaskSet::Full),
            _ => Err(Error::Config(format!(
                "unknown mask set {s:?} (expected vertical, vertical_horizontal or full)"
            ))),
        }
    }
}

/// A single-channel plane of 0/1 values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    width: u32,
    height: u32,
    bits: Vec<u8>,
}

impl Mask {
    /// `LeftOn` turns on columns `[0, w/2)`, `RightOn` turns on `[w/2, w)`,
    /// and likewise for rows. On odd sizes the first half gets `floor(d/2)`.
    pub fn new(width: u32, height: u32, kind: MaskKind) -> Result<Self> {
        Self::from_fn(width, height, |x, y| match kind {
            MaskKind::LeftOn => x < width / 2,
            MaskKind::RightOn => x >= width / 2,
            MaskKind::TopOn => y < height / 2,
            MaskKind::BottomOn => y >= height / 2,
        })
    }

    pub fn filled(width: u32, height: u32, on: bool) -> Result<Self> {
        Self::from_fn(width, height, |_, _| on)
    }

    pub fn from_fn(width: u32, height: u32, mut on: impl FnMut(u32, u32) -> bool) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions {
                width,
                height,
                reason: "mask dimensions must be at least 1",
            });
        }
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(u8::from(on(x, y)));
            }
        }
        Ok(Self { width, height, bits })
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

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn popcount(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|&b| 1 - b).collect(),
        }
    }

    /// The mask as a grayscale image (on = white).
    pub fn to_image(&self) -> ImageBuffer {
        let data = self
            .bits
            .iter()
            .flat_map(|&b| [f32::from(b); CHANNELS])
            .collect();
        ImageBuffer::from_raw_unchecked(self.width, self.height, data)
    }
}

pub fn make_mask(width: u32, height: u32, kind: MaskKind) -> Result<Mask> {
    Mask::new(width, height, kind)
}

/// Takes `generated` where the mask is 1 and `original` where it is 0.
pub fn concatenate(original: &ImageBuffer, generated: &ImageBuffer, mask: &Mask) -> Result<ImageBuffer> {
    for actual in [generated.dims(), mask.dims()] {
        if actual != original.dims() {
            return Err(Error::DimensionMismatch {
                expected: original.dims(),
                actual,
            });
        }
    }
    let data = original
        .as_slice()
        .chunks_exact(CHANNELS)
        .zip(generated.as_slice().chunks_exact(CHANNELS))
        .zip(&mask.bits)
        .flat_map(|((o, g), &m)| if m == 1 { [g[0], g[1], g[2]] } else { [o[0], o[1], o[2]] })
        .collect();
    Ok(ImageBuffer::from_raw_unchecked(original.width(), original.height(), data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn even_left_split() {
        let m = Mask::new(4, 2, MaskKind::LeftOn).unwrap();
        assert_eq!(m.bits(), &[1, 1, 0, 0, 1, 1, 0, 0]);
    }

    #[test]
    fn odd_width_floor_rule() {
        let m = Mask::new(5, 1, MaskKind::LeftOn).unwrap();
        assert_eq!(m.bits(), &[1, 1, 0, 0, 0]);
        let m = Mask::new(5, 1, MaskKind::RightOn).unwrap();
        assert_eq!(m.bits(), &[0, 0, 1, 1, 1]);
    }

    #[test]
    fn top_bottom_complement() {
        let top = Mask::new(2, 4, MaskKind::TopOn).unwrap();
        let bottom = Mask::new(2, 4, MaskKind::BottomOn).unwrap();
        assert!(top.bits().iter().zip(bottom.bits()).all(|(a, b)| a + b == 1));
        assert_eq!(top.bits(), &[1, 1, 1, 1, 0, 0, 0, 0]);
    }

    #[test]
    fn flip_is_involution() {
        for k in MaskKind::ALL {
            assert_ne!(k.flip(), k);
            assert_eq!(k.flip().flip(), k);
        }
        assert_eq!(MaskKind::LeftOn.flip(), MaskKind::RightOn);
        assert_eq!(MaskKind::TopOn.flip(), MaskKind::BottomOn);
    }

    #[test]
    fn zero_dims_rejected() {
        assert!(Mask::new(0, 3, MaskKind::LeftOn).is_err());
        assert!(Mask::new(3, 0, MaskKind::TopOn).is_err());
    }

    #[test]
    fn names_round_trip() {
        for k in MaskKind::ALL {
            assert_eq!(k.as_str().parse::<MaskKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{}\"", k.as_str()));
        }
        for s in [MaskSet::Vertical, MaskSet::VerticalHorizontal, MaskSet::Full] {
            assert_eq!(s.as_str().parse::<MaskSet>().unwrap(), s);
        }
        assert!("diagonal".parse::<MaskSet>().is_err());
    }

    fn img(vals: &[f32]) -> ImageBuffer {
        let data = vals.iter().flat_map(|&v| [v; 3]).collect();
        ImageBuffer::new(vals.len() as u32, 1, data).unwrap()
    }

    #[test]
    fn concatenate_left_on() {
        let original = img(&[0.1, 0.2]);
        let generated = img(&[0.9, 0.3]);
        let mask = Mask::new(2, 1, MaskKind::LeftOn).unwrap();
        let h = concatenate(&original, &generated, &mask).unwrap();
        // Elementwise G*M + I*(1-M).
        let expect: Vec<f32> = (0..2)
            .flat_map(|x| {
                let m = f32::from(mask.get(x, 0));
                let v = generated.pixel(x, 0)[0] * m + original.pixel(x, 0)[0] * (1.0 - m);
                [v; 3]
            })
            .collect();
        assert_eq!(h.as_slice(), expect.as_slice());
        assert_eq!(h.as_slice(), &[0.9, 0.9, 0.9, 0.2, 0.2, 0.2]);
    }

    #[test]
    fn concatenate_endpoints_and_mismatch() {
        let original = img(&[0.1, 0.2, 0.3]);
        let generated = img(&[0.7, 0.8, 0.9]);
        let ones = Mask::filled(3, 1, true).unwrap();
        let zeros = Mask::filled(3, 1, false).unwrap();
        assert_eq!(concatenate(&original, &generated, &ones).unwrap(), generated);
        assert_eq!(concatenate(&original, &generated, &zeros).unwrap(), original);
        let small = Mask::filled(2, 1, true).unwrap();
        assert!(matches!(
            concatenate(&original, &generated, &small),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(concatenate(&original, &img(&[0.5]), &ones).is_err());
    }

    #[test]
    fn mask_set_sampling() {
        let mut rng = RngStream::new(3);
        for _ in 0..200 {
            assert_eq!(MaskSet::Vertical.sample(&mut rng), MaskKind::LeftOn);
            let k = MaskSet::VerticalHorizontal.sample(&mut rng);
            assert!(matches!(k, MaskKind::LeftOn | MaskKind::TopOn));
        }
        let mut counts = std::collections::HashMap::new();
        for _ in 0..40_000 {
            *counts.entry(MaskSet::Full.sample(&mut rng)).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 4);
        for &c in counts.values() {
            assert!((c as f64 / 40_000.0 - 0.25).abs() <= 0.03, "{counts:?}");
        }
    }

    proptest! {
        #[test]
        fn masks_are_binary_and_complementary(w in 1u32..=64, h in 1u32..=64) {
            for k in MaskKind::ALL {
                let m = Mask::new(w, h, k).unwrap();
                let c = Mask::new(w, h, k.flip()).unwrap();
                prop_assert!(m.bits().iter().all(|&b| b <= 1));
                prop_assert_eq!(&m.complement(), &c);
                prop_assert_eq!(m.popcount(), (w * h) as usize - c.popcount());
                let split = match k {
                    MaskKind::LeftOn | MaskKind::RightOn => w,
                    _ => h,
                };
                if split % 2 == 0 {
                    prop_assert_eq!(m.popcount() * 2, (w * h) as usize);
                }
            }
        }

        #[test]
        fn complement_closure(
            (w, h, a, b) in (1u32..12, 1u32..12).prop_flat_map(|(w, h)| {
                let n = (w * h * 3) as usize;
                (Just(w), Just(h), proptest::collection::vec(0.0f32..=1.0, n), proptest::collection::vec(0.0f32..=1.0, n))
            }),
            kind in proptest::sample::select(MaskKind::ALL.to_vec()),
        ) {
            let original = ImageBuffer::new(w, h, a).unwrap();
            let generated = ImageBuffer::new(w, h, b).unwrap();
            let mask = Mask::new(w, h, kind).unwrap();
            let lhs = concatenate(&original, &generated, &mask).unwrap();
            let rhs = concatenate(&generated, &original, &mask.complement()).unwrap();
            prop_assert_eq!(&lhs, &rhs);
            // Pixels where the mask is off come from the original untouched.
            for y in 0..h {
                for x in 0..w {
                    if mask.get(x, y) == 0 {
                        prop_assert_eq!(lhs.pixel(x, y), original.pixel(x, y));
                    } else {
                        prop_assert_eq!(lhs.pixel(x, y), generated.pixel(x, y));
                    }
                }
            }
        }
    }
}
