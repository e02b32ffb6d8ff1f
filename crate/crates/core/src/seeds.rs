//! Deterministic per-trajectory random streams.
//!
//! Every stochastic ingredient of a trajectory draws from its own stream,
//! keyed by `(master_seed, index, tag)` through the ChaCha block function.
//! Streams depend only on their key, never on scheduling order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Which ingredient a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamTag {
    /// Two-qubit unitaries.
    Gates,
    /// Measurement site selection and Born draws.
    Measurements,
    /// Noise for the reference run of a trajectory or script.
    Noise,
    /// Noise for replay `r` of a circuit script.
    Replay(u32),
}

impl StreamTag {
    fn code(self) -> u64 {
        match self {
            StreamTag::Gates => 1,
            StreamTag::Measurements => 2,
            StreamTag::Noise => 3,
            StreamTag::Replay(r) => (1 << 32) | r as u64,
        }
    }
}

/// Derives the 64-bit seed of stream `(master, index, tag)`.
pub fn stream_seed(master: u64, index: u64, tag: StreamTag) -> u64 {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master.to_le_bytes());
    key[8..16].copy_from_slice(&index.to_le_bytes());
    key[16..24].copy_from_slice(&tag.code().to_le_bytes());
    ChaCha8Rng::from_seed(key).next_u64()
}

pub fn rng_from_seed(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stream_rng(master: u64, index: u64, tag: StreamTag) -> StreamRng {
    rng_from_seed(stream_seed(master, index, tag))
}
