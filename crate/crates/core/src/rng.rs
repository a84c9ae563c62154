//! Seedable, splittable random streams.
//!
//! Every chain draws from its own ChaCha8 stream selected by
//! `(master seed, stream index)`, so a family of chains is reproducible
//! regardless of how the chains are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used by every sampler in the crate.
pub type ChainRng = ChaCha8Rng;

/// Stream `index` of the family rooted at `seed`.
pub fn stream(seed: u64, index: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}
