//! Seed derivation.
//!
//! Every stochastic step (splits, folds, bootstraps, feature subsampling,
//! row subsampling, EM seeding) draws from its own ChaCha8 stream. Stream
//! seeds are derived from the user seed with a SplitMix64 finalizer so that
//! results depend only on `(seed, stream)` and never on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags. Nested components derive further with [`derive`].
pub mod stream {
    pub const SPLIT: u64 = 0x5350_4c49;
    pub const FOLDS: u64 = 0x464f_4c44;
    pub const FOREST: u64 = 0x4652_5354;
    pub const TREE: u64 = 0x5452_4545;
    pub const BOOSTING: u64 = 0x4742_4f4f;
    pub const MIXTURE: u64 = 0x474d_4d30;
    pub const SYNTHETIC: u64 = 0x5359_4e54;
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent child seed for `stream` from `seed`.
pub fn derive(seed: u64, stream: u64) -> u64 {
    splitmix64(seed ^ splitmix64(stream))
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn child_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    rng_from(derive(seed, stream))
}
