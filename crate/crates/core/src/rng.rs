//! Reproducible block sampling.
//!
//! The generator is xoshiro256** seeded from a `u64` through SplitMix64,
//! the reference seeding procedure for the xoshiro family. A block index in
//! `0..n` is drawn by masked rejection: take the top `b = ⌈log2 n⌉` bits of
//! the next output and retry while the value is `≥ n`. For `n = 1` no output
//! is consumed. Any implementation of these two reference algorithms
//! reproduces the same block sequence for the same seed.

use rand::RngCore;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256StarStar;

#[derive(Debug, Clone)]
pub struct BlockSampler {
    rng: Xoshiro256StarStar,
    n: usize,
    bits: u32,
}

impl BlockSampler {
    pub fn new(seed: u64, n: usize) -> Self {
        assert!(n >= 1, "need at least one block");
        let bits = if n == 1 {
            0
        } else {
            usize::BITS - (n - 1).leading_zeros()
        };
        Self {
            rng: Xoshiro256StarStar::seed_from_u64(seed),
            n,
            bits,
        }
    }

    pub fn n_blocks(&self) -> usize {
        self.n
    }

    /// Next uniformly distributed block index.
    pub fn next_block(&mut self) -> usize {
        if self.n == 1 {
            return 0;
        }
        loop {
            let v = (self.rng.next_u64() >> (64 - self.bits)) as usize;
            if v < self.n {
                return v;
            }
        }
    }
}

/// Seed of run `j` in a family of runs sharing `base`.
pub fn run_seed(base: u64, j: usize) -> u64 {
    base.wrapping_add(j as u64)
}
