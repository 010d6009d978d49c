//! Counter-based random substreams.
//!
//! Every stochastic quantity is drawn from a ChaCha8 keystream keyed by the
//! master seed and addressed by a 64-bit stream id
//! `(purpose << 48) | (lane << 32) | block`. A block is a fixed number of
//! samples or frequency bins, so the numbers a block receives do not depend
//! on which thread generates it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::with_workers;

/// Samples (or bins) per independently seeded block.
pub const BLOCK_LEN: usize = 1 << 14;

/// What a stream is used for; keeps unrelated draws independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u16)]
pub enum Purpose {
    Source = 1,
    Vacuum = 2,
    DetectorLoss = 3,
    Electronics = 4,
    User = 5,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamId {
    pub purpose: Purpose,
    pub lane: u16,
}

impl StreamId {
    pub fn new(purpose: Purpose, lane: u16) -> Self {
        Self { purpose, lane }
    }

    fn word(&self, block: usize) -> u64 {
        ((self.purpose as u64) << 48) | ((self.lane as u64) << 32) | (block as u64 & 0xffff_ffff)
    }

    /// Generator for one block of this stream.
    pub fn block_rng(&self, seed: u64, block: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(self.word(block));
        rng
    }
}

/// `len` independent standard normals from the given stream.
pub fn standard_normals(
    len: usize,
    seed: u64,
    stream: StreamId,
    workers: Option<usize>,
) -> Vec<f64> {
    let mut out = vec![0.0; len];
    with_workers(workers, || {
        out.par_chunks_mut(BLOCK_LEN)
            .enumerate()
            .for_each(|(block, chunk)| {
                let mut rng = stream.block_rng(seed, block);
                for v in chunk {
                    *v = StandardNormal.sample(&mut rng);
                }
            });
    });
    out
}
