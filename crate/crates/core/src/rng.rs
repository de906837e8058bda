//! Hierarchical seed derivation.
//!
//! Every random stream in the crate is derived from a parent seed and a path
//! of integer tags (scenario → consumer → day), so a stream's contents never
//! depend on how many draws other streams made or in which order they ran.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(parent), |acc, &tag| splitmix64(acc ^ splitmix64(tag.wrapping_mul(GOLDEN))))
}

pub fn stream(parent: u64, path: &[u64]) -> Rng {
    Rng::seed_from_u64(derive_seed(parent, path))
}

/// Tags naming the independent sub-streams of a scenario.
pub(crate) mod tag {
    pub const AREAS: u64 = 1;
    pub const THIEVES: u64 = 2;
    pub const FDI_TYPE: u64 = 3;
    pub const DAYS: u64 = 4;
    pub const CONSUMER_PARAMS: u64 = 5;
    pub const DAY_PARAMS: u64 = 6;
    pub const OBSERVER_NOISE: u64 = 7;
    pub const SYNTH: u64 = 8;
    pub const TRIAL: u64 = 9;
}
