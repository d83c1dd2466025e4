//! Seed derivation for reproducible, parallel pipelines.
//!
//! Every random decision in the pipeline draws from a ChaCha stream derived
//! from the master seed plus a textual path (stage name, note id, candidate
//! index, ...). Streams are independent of scheduling order, so a worker
//! pool of any size produces byte-identical output for a fixed master seed.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// Derives independent RNG streams from a single master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedSource {
    master: u64,
}

impl SeedSource {
    pub fn new(master: u64) -> Self {
        Self { master }
    }

    pub fn master(&self) -> u64 {
        self.master
    }

    /// Stream keyed by an arbitrary label path. The same path always yields
    /// the same stream; distinct paths yield independent streams.
    pub fn stream(&self, path: &[&str]) -> ChaCha12Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.master.to_le_bytes());
        for part in path {
            // Unit separator keeps ["ab","c"] distinct from ["a","bc"].
            hasher.update([0x1f]);
            hasher.update(part.as_bytes());
        }
        let digest = hasher.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha12Rng::from_seed(seed)
    }

    /// Per-note stream for a named pipeline stage.
    pub fn note_stream(&self, stage: &str, note_id: &str) -> ChaCha12Rng {
        self.stream(&[stage, note_id])
    }
}
