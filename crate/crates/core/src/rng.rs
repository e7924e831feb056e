//! Seeded random streams.
//!
//! Every `(image, augmentation)` pair gets its own ChaCha8 stream whose seed
//! is a SplitMix64 avalanche of `(seed, image_index, aug_index)`. Draws never
//! depend on which worker handles a pair or in which order.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

const IMAGE_SALT: u64 = 0xD1B5_4A32_D192_ED03;
const AUG_SALT: u64 = 0x8CB9_2BA7_2F3D_8DD7;

/// SplitMix64 finalizer. A bijection on `u64`.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream for augmentation `aug_index` of image `image_index`.
pub fn derive_sub_seed(seed: u64, image_index: u64, aug_index: u64) -> u64 {
    let s = splitmix64(seed);
    let s = splitmix64(s ^ image_index.wrapping_mul(IMAGE_SALT));
    splitmix64(s ^ aug_index.wrapping_mul(AUG_SALT))
}

pub fn derive_substream(seed: u64, image_index: u64, aug_index: u64) -> RngStream {
    RngStream::new(derive_sub_seed(seed, image_index, aug_index))
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// The seed this stream was created from.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform index in `0..n` (Lemire's multiply-and-reject, unbiased).
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "cannot draw from an empty range");
        let range = n as u64;
        let threshold = range.wrapping_neg() % range;
        loop {
            let m = u128::from(self.next_u64()) * u128::from(range);
            if (m as u64) >= threshold {
                return (m >> 64) as usize;
            }
        }
    }

    /// Uniform float in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }

    pub fn choose<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.index(items.len())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn splitmix_reference_values() {
        // Reference outputs of SplitMix64 seeded with 0, i.e. successive
        // states 0x9E37.., 2 * 0x9E37.., ... through the finalizer.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(splitmix64(0x9E37_79B9_7F4A_7C15), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn same_triple_same_stream() {
        let mut a = derive_substream(42, 3, 1);
        let mut b = derive_substream(42, 3, 1);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn frozen_substream_trace() {
        // Recorded once from this implementation and frozen.
        assert_eq!(derive_sub_seed(7, 0, 0), FROZEN_SUB_SEED_7_0_0);
        assert_eq!(derive_sub_seed(7, 0, 1), FROZEN_SUB_SEED_7_0_1);
        let first_a = derive_substream(7, 0, 0).next_u64();
        let first_b = derive_substream(7, 0, 1).next_u64();
        assert_eq!(first_a, FROZEN_FIRST_DRAW_7_0_0);
        assert_eq!(first_b, FROZEN_FIRST_DRAW_7_0_1);
        assert_ne!(first_a, first_b);
    }

    const FROZEN_SUB_SEED_7_0_0: u64 = 11_241_344_834_629_033_336;
    const FROZEN_SUB_SEED_7_0_1: u64 = 10_973_308_141_824_369_286;
    const FROZEN_FIRST_DRAW_7_0_0: u64 = 15_937_108_069_222_054_755;
    const FROZEN_FIRST_DRAW_7_0_1: u64 = 3_965_215_532_320_902_889;

    #[test]
    fn distinct_pairs_distinct_seeds() {
        let mut seen = HashSet::new();
        for i in 0..100 {
            for a in 0..100 {
                seen.insert(derive_sub_seed(1234, i, a));
            }
        }
        assert_eq!(seen.len(), 10_000);
    }

    #[test]
    fn index_is_in_range_and_roughly_uniform() {
        let mut rng = RngStream::new(9);
        let mut counts = [0usize; 7];
        for _ in 0..70_000 {
            counts[rng.index(7)] += 1;
        }
        for c in counts {
            assert!((c as f64 / 70_000.0 - 1.0 / 7.0).abs() < 0.01, "{counts:?}");
        }
        assert_eq!(RngStream::new(1).index(1), 0);
    }

    #[test]
    fn unit_in_half_open_interval() {
        let mut rng = RngStream::new(5);
        for _ in 0..10_000 {
            let u = rng.unit();
            assert!((0.0..1.0).contains(&u));
        }
    }
}
