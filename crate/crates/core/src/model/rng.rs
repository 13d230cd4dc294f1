//! Deterministic random substreams.
//!
//! Every random quantity comes from a ChaCha8 generator keyed by the
//! experiment seed and a stream id. Offsets and noise use disjoint stream ids,
//! and each antenna/subcarrier noise series owns its own stream, so any
//! traversal order or partitioning of the `(n, k)` index space reproduces the
//! same samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named substreams derived from one experiment seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    FrequencyOffsets,
    SpatialOffsets,
    /// Noise of one antenna/subcarrier series (flattened `n·K + k` index).
    Noise { series: u64 },
}

impl Substream {
    fn id(self) -> u64 {
        match self {
            Substream::FrequencyOffsets => 1,
            Substream::SpatialOffsets => 2,
            Substream::Noise { series } => (1 << 32) + series,
        }
    }
}

pub fn substream(seed: u64, stream: Substream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
