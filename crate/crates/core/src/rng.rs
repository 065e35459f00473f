//! Seed derivation.
//!
//! Every independent draw sequence (one scan position, one bootstrap
//! resample, one analyzer grid point) gets its own ChaCha8 stream keyed by
//! the caller's 64-bit seed, so results do not depend on evaluation order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Generator for stream `index` under `seed`.
pub(crate) fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Seed for the `index`-th independent sub-run of a run seeded with `seed`.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    stream(seed, index).next_u64()
}
