//! Seeded, platform-independent random streams.
//!
//! Every random quantity in a trial is drawn from a ChaCha8 stream keyed by
//! `(seed, purpose)`, so graph, instance and protocol draws never interleave.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Independent stream identifiers within one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Graph = 1,
    Instance = 2,
    Protocol = 3,
}

pub fn seeded(seed: u64, stream: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
