//! Deterministic random streams.
//!
//! Every Monte Carlo consumer draws from a ChaCha8 generator keyed by a
//! `(master seed, stream index)` pair: the master seed is expanded into the
//! 256-bit ChaCha key with `seed_from_u64`, and the stream index is written to
//! ChaCha's 64-bit stream (nonce) word. ChaCha is counter-based, so distinct
//! stream indices give independent, non-overlapping sequences and the output
//! of stream `i` never depends on how many other streams were consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Generator for sub-stream `stream` of `master_seed`.
pub fn stream(master_seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}
