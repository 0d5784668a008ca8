//! Seeded random streams.
//!
//! Every consumer of randomness draws from its own ChaCha stream derived from
//! the run seed, so adding a consumer never perturbs the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

/// Stream identifiers used across the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Shuffle = 2,
    Swap = 3,
    Dropout = 4,
    ProbeSplit = 5,
    Oracle = 6,
    Direction = 7,
}

pub fn stream(seed: u64, stream: Stream) -> SeededRng {
    stream_id(seed, stream as u64)
}

pub fn stream_id(seed: u64, id: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
