//! Seed handling. Every random stream in the crate is a ChaCha8 generator
//! seeded from a root seed; independent tasks use distinct stream ids of the
//! same root (`derive(root, stream)`), so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn from_seed(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for sub-task `stream` of the root seed.
pub fn derive(root: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root);
    rng.set_stream(stream);
    rng
}

/// Stream ids for the pipeline stages, so that e.g. trace generation and the
/// phase model never share random numbers.
pub mod streams {
    pub const TRACES: u64 = 1 << 40;
    pub const ELLIPSE: u64 = 2 << 40;
    pub const MODEL: u64 = 3 << 40;
    pub const ASSIGN: u64 = 4 << 40;
    pub const TOMOGRAPHY: u64 = 5 << 40;
    pub const CUMULANTS: u64 = 6 << 40;
}
