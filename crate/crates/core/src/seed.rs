//! Master-seed splitting.
//!
//! Every random stream in an experiment is derived from one master seed by
//! hashing `(master, stream, index)` with the SplitMix64 finalizer. Streams
//! are identified by a fixed tag so adding a new consumer never shifts the
//! seeds of existing ones.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The random generator used everywhere in the crate.
pub type Rng = ChaCha8Rng;

/// Stream tags. Values are frozen; changing one changes every result that uses it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Demonstrations = 1,
    /// One per trial; shared across manifold dimensions so every `k` sees the same levels.
    TrialLevels = 2,
    TrialLearner = 3,
    Play = 4,
    Pretrain = 5,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream as u64) ^ index)
}

pub fn rng_for(master: u64, stream: Stream, index: u64) -> Rng {
    Rng::seed_from_u64(derive_seed(master, stream, index))
}
