//! Seed handling. Every stochastic routine takes explicit generator state or a
//! seed; parallel work derives one independent stream per chunk so that the
//! result never depends on how chunks are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate.
pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a parent seed with a stream index into a new seed.
pub fn derive_seed(parent: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ splitmix64(stream.wrapping_add(0xA076_1D64_78BD_642F)))
}

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Generator for stream `stream` under `parent`.
pub fn stream_rng(parent: u64, stream: u64) -> SimRng {
    rng_from_seed(derive_seed(parent, stream))
}
