//! Seed expansion and permutation sampling.
//!
//! Reproducibility across runs, machines, and reimplementations requires the
//! seed -> permutation map to be pinned exactly, so the generator is spelled
//! out here rather than borrowed from an RNG crate:
//!
//! 1. **Stream**: SplitMix64. State advances by 0x9E3779B97F4A7C15 per draw;
//!    the output is the new state mixed by two xor-shift-multiply rounds
//!    (constants 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB, shifts 30/27/31).
//! 2. **Bounded draw** `below(n)`: rejection sampling. Let
//!    `zone = 2^64 - (2^64 mod n)`; draw 64-bit words until one is `< zone`
//!    and return it mod n. Unbiased for every n.
//! 3. **Permutation of k**: start from the identity [0, 1, ..., k-1] and run
//!    a backward Fisher-Yates: for i = k-1 down to 1, swap positions i and
//!    `below(i+1)`.
//!
//! A sequence of permutations (as in the Monte Carlo evaluator) consumes one
//! shared stream in order; nothing is reseeded in between. The test vectors
//! at the bottom freeze the contract.

/// SplitMix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Next 64-bit word.
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform draw from [0, n). `n` must be nonzero.
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        // 2^64 mod n, computed without 128-bit arithmetic.
        let rem = (u64::MAX % n + 1) % n;
        let zone = u64::MAX - rem; // accept x <= zone, i.e. x < 2^64 - rem
        loop {
            let x = self.next_u64();
            if x <= zone {
                return x % n;
            }
        }
    }

    /// Uniform f64 in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform permutation of 0..k via backward Fisher-Yates.
    pub fn permutation(&mut self, k: usize) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..k).collect();
        for i in (1..k).rev() {
            let j = self.below(i as u64 + 1) as usize;
            perm.swap(i, j);
        }
        perm
    }
}
