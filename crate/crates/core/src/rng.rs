//! Counter-based random streams.
//!
//! Every Monte Carlo sample owns a stream addressed by `(seed, index)`: the seed
//! fixes a ChaCha key and the index selects one of its 2^64 independent streams.
//! Results therefore never depend on how samples are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type StreamRng = ChaCha8Rng;

/// Domain-separation tags for [`derive_seed`].
pub mod tag {
    pub const NOISE: u64 = 1;
    pub const BRIDGE: u64 = 2;
    pub const CANDIDATE: u64 = 3;
    pub const PROBES: u64 = 4;
    pub const REFERENCE: u64 = 5;
    pub const PILOT: u64 = 6;
    pub const CONFIRM: u64 = 7;
    pub const CHECK: u64 = 8;
    pub const SWEEP: u64 = 9;
}

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hash `(seed, tag, index)` into a fresh seed.
pub fn derive_seed(seed: u64, tag: u64, index: u64) -> u64 {
    mix64(mix64(seed ^ mix64(tag)) ^ index.wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Stream `index` of the generator keyed by `seed`.
pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        state = mix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Fill `buf` with i.i.d. N(0, std^2) draws.
pub fn fill_normal<R: rand::Rng + ?Sized>(rng: &mut R, buf: &mut [f64], std: f64) {
    for v in buf.iter_mut() {
        let z: f64 = StandardNormal.sample(rng);
        *v = std * z;
    }
}
