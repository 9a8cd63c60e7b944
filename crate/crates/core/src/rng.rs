//! Seed derivation and random streams.
//!
//! Every random quantity in the crate is drawn from a stream identified by a
//! master seed plus a path of integer tags (grid index, replicate index,
//! stream kind, row index, ...). Tags are folded into a 64-bit stream seed
//! with the SplitMix64 finalizer, and the stream itself is a ChaCha8
//! generator seeded from that value. Because a stream depends only on its
//! tag path, results never depend on scheduling or thread count.
//!
//! Per-pair edge draws in the dense sampling path skip the ChaCha stream
//! entirely and hash `(seed, i, j)` directly with [`pair_uniform`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named stream kinds used under a replicate seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Stream {
    Graph = 0x67_7261_7068,
    Treatment = 0x74_7265_6174,
    Noise = 0x6e_6f69_7365,
    Solver = 0x73_6f6c_7665,
    Theory = 0x74_6865_6f72,
}

/// SplitMix64 output function (Steele, Lea & Flood 2014).
#[inline]
pub const fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fold a tag path into a seed: `s_0 = mix(seed)`, `s_{k+1} = mix(s_k ^ mix(tag_k + c))`.
pub fn derive(seed: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(splitmix64(seed), |acc, &t| {
        splitmix64(acc ^ splitmix64(t.wrapping_add(0x632B_E59B_D9B4_E019)))
    })
}

pub fn stream_seed(seed: u64, stream: Stream) -> u64 {
    derive(seed, &[stream as u64])
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    rng_from(stream_seed(seed, stream))
}

/// Map 64 random bits to a double in `[0, 1)` using the top 53 bits.
#[inline]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw attached to the unordered pair `{i, j}` with `i < j`.
#[inline]
pub fn pair_uniform(seed: u64, i: u64, j: u64) -> f64 {
    let row = splitmix64(seed ^ i.wrapping_mul(0xD1B5_4A32_D192_ED03));
    unit_f64(splitmix64(row ^ j.wrapping_mul(0xAEF1_7502_108E_F2D9)))
}
