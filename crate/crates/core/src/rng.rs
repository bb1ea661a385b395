//! Seeded, splittable random streams.
//!
//! A [`Stream`] is a 256-bit ChaCha key. Draws come from ChaCha8 keyed by it
//! (stream id 0). [`Stream::split`] derives a child key by reading 32 bytes
//! of ChaCha20 output under the parent key with the label as the ChaCha
//! stream id, so every `(parent, label)` pair names an independent child
//! without any shared state. Replications use
//! `Stream::from_seed(master).split(rep)`, which keeps one replication's
//! randomness untouched by what any other replication consumes.

use rand::{RngCore, SeedableRng};
use rand_chacha::{ChaCha20Rng, ChaCha8Rng};
use rand_distr::{Distribution, StandardNormal};

/// Sub-stream labels used inside one replication.
pub mod labels {
    pub const SIGNAL: u64 = 0;
    pub const INIT: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const RECURRENCE: u64 = 3;
}

#[derive(Clone, Debug)]
pub struct Stream {
    key: [u8; 32],
    rng: ChaCha8Rng,
}

impl Stream {
    pub fn from_seed(seed: u64) -> Self {
        let mut key = [0u8; 32];
        ChaCha20Rng::seed_from_u64(seed).fill_bytes(&mut key);
        Self::from_key(key)
    }

    fn from_key(key: [u8; 32]) -> Self {
        Self {
            key,
            rng: ChaCha8Rng::from_seed(key),
        }
    }

    /// Derives the child stream named `label`. Independent of how much has
    /// been drawn from `self`.
    pub fn split(&self, label: u64) -> Stream {
        let mut kdf = ChaCha20Rng::from_seed(self.key);
        kdf.set_stream(label);
        let mut key = [0u8; 32];
        kdf.fill_bytes(&mut key);
        Self::from_key(key)
    }

    /// Stream for replication `rep` under `master_seed`.
    pub fn replication(master_seed: u64, rep: u64) -> Stream {
        Stream::from_seed(master_seed).split(rep)
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for x in out {
            *x = StandardNormal.sample(&mut self.rng);
        }
    }

    pub fn standard_normal_vec(&mut self, len: usize) -> Vec<f64> {
        let mut v = vec![0.0; len];
        self.fill_standard_normal(&mut v);
        v
    }
}

impl RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}
