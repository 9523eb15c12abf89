//! Seedable, splittable random streams.
//!
//! A stream is identified by a 64-bit master seed and a 64-bit stream index.
//! The high 32 bits of the index name a *family* (one per independent role,
//! e.g. main draws vs. variance pairs vs. verification samples) and the low
//! 32 bits a worker or block within that family.

use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

pub const FAMILY_MAIN: u32 = 0;
pub const FAMILY_SKETCH: u32 = 1;
pub const FAMILY_VERIFY: u32 = 2;
pub const FAMILY_TUNE: u32 = 3;
pub const FAMILY_PILOT: u32 = 4;
pub const FAMILY_PAIRS: u32 = 5;
pub const FAMILY_AUX: u32 = 6;

#[inline]
pub fn stream_index(family: u32, block: u32) -> u64 {
    (u64::from(family) << 32) | u64::from(block)
}

/// SplitMix64 finalizer; a bijection on `u64`.
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct RandomStream(Xoshiro256PlusPlus);

impl RandomStream {
    /// The first two state words are bijective images of `seed` and `index`,
    /// so distinct pairs never share a state.
    pub fn new(seed: u64, index: u64) -> Self {
        let w0 = mix(seed);
        let w1 = mix(index ^ 0xD1B5_4A32_D192_ED03);
        let w2 = mix(w0 ^ w1.rotate_left(17));
        let w3 = mix(w1 ^ w0.rotate_left(41)) | 1;
        let mut bytes = [0u8; 32];
        for (chunk, w) in bytes.chunks_exact_mut(8).zip([w0, w1, w2, w3]) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        RandomStream(Xoshiro256PlusPlus::from_seed(bytes))
    }

    pub fn for_family(seed: u64, family: u32, block: u32) -> Self {
        Self::new(seed, stream_index(family, block))
    }

    /// Uniform real in `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    /// Uniform integer in `[0, n)`.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}
