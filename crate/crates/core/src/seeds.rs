//! Sub-seed derivation.
//!
//! Every random component draws from a ChaCha8 stream keyed by a master seed
//! and a stream tag, so one `--seed` controls a whole run and components never
//! share a stream.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream tags for sub-seeds derived from a run or scenario seed.
pub mod tag {
    pub const TOPOLOGY: u64 = 1;
    pub const OD_SELECTION: u64 = 2;
    pub const TRUE_DEMAND: u64 = 3;
    pub const DYNAMICS: u64 = 4;
    pub const GROUND_TRUTH: u64 = 5;
    pub const INITIAL_POINT: u64 = 11;
    pub const EVALUATION: u64 = 12;
    pub const METAMODEL: u64 = 13;
    pub const SPSA: u64 = 14;
}

/// Generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// First word of stream `stream` of `seed`.
pub fn derive(seed: u64, stream: u64) -> u64 {
    stream_rng(seed, stream).next_u64()
}
