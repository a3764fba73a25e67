//! Counter-based random streams.
//!
//! Every random draw in the crate is addressed by `(master seed, stream id,
//! index)`. The `(seed, stream)` pair is hashed into a ChaCha key and the
//! index selects the ChaCha stream, so draw `i` never depends on how many
//! draws happened before it or on which worker thread performs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream identifiers. Distinct purposes never share a key.
pub mod streams {
    pub const NOISE: u64 = 1;
    pub const DATA: u64 = 2;
    pub const INIT: u64 = 3;
    pub const SHUFFLE: u64 = 4;
    pub const ATTACK_START: u64 = 5;
    pub const SENSITIVITY: u64 = 6;
    pub const CHILD: u64 = 7;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator for draw `index` of `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    let words = [
        splitmix64(seed),
        splitmix64(stream ^ 0xA5A5_A5A5_A5A5_A5A5),
        splitmix64(seed.rotate_left(17) ^ stream),
        0x7265_6e6f_6972_2121,
    ];
    for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Child seed for sub-computation `index` (e.g. one dataset row).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    use rand::RngCore;
    stream_rng(seed, streams::CHILD, index).next_u64()
}
