//! Counter-based seed derivation.
//!
//! A single root seed fans out into independent per-stream seeds, so the
//! random numbers a stream sees never depend on how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sub-seed for `stream` under `root`.
pub fn derive(root: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(root) ^ splitmix64(stream.wrapping_add(0xD1B5_4A32_D192_ED03)))
}

/// Sub-seed for a two-level stream path, e.g. (iteration, purpose).
pub fn derive2(root: u64, a: u64, b: u64) -> u64 {
    derive(derive(root, a), b)
}

pub fn rng(root: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(root, stream))
}
