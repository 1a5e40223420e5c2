//! Counter-based random streams.
//!
//! Every random draw in a simulation comes from a [`StreamRng`] whose key is
//! derived from the master seed and a path of labels (domain, hop, node, ...).
//! Two streams with the same path produce the same sequence regardless of the
//! order in which they are created or which thread consumes them, so results
//! do not depend on traversal order or worker count.

use rand::RngCore;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Stream domains. Keeping them distinct means adding a new consumer never
/// perturbs the draws of an existing one.
pub mod domain {
    pub const GRAPH: u64 = 1;
    pub const CATEGORIES: u64 = 2;
    pub const CHANGING: u64 = 3;
    pub const SEEDING: u64 = 4;
    pub const HOP: u64 = 5;
    pub const BOTS: u64 = 6;
    pub const RUN: u64 = 7;
    pub const WEEK: u64 = 8;
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamRng {
    key: u64,
    counter: u64,
}

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        StreamRng {
            key: mix64(seed ^ 0x6A09_E667_F3BC_C908),
            counter: 0,
        }
    }

    /// Child stream identified by `label`. Does not advance `self`.
    pub fn derive(&self, label: u64) -> Self {
        StreamRng {
            key: mix64(self.key ^ mix64(label.wrapping_add(GOLDEN))),
            counter: 0,
        }
    }

    pub fn derive_path(&self, labels: &[u64]) -> Self {
        labels.iter().fold(self.clone(), |s, &l| s.derive(l))
    }

    /// Identifier of this stream; equal keys mean identical sequences.
    pub fn key(&self) -> u64 {
        self.key
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `(0, 1]`; safe to pass to `ln`.
    pub fn unit_open_low(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let out = mix64(self.key ^ mix64(self.counter.wrapping_mul(GOLDEN)));
        self.counter = self.counter.wrapping_add(1);
        out
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for chunk in dst.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
