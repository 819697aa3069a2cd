//! Deterministic counter-based random numbers.
//!
//! Everything random in this crate (k-means seeding, synthetic games) flows
//! through [`CounterRng`], a SplitMix64-style generator: output `i` is the
//! SplitMix64 finalizer applied to `key + (i+1) * GOLDEN`. Because each draw
//! is a pure function of `(key, i)` the stream is reproducible across
//! platforms and independent of evaluation strategy. `derive` builds
//! decorrelated sub-streams (per restart, per k, per purpose) from a parent
//! key, so adding a consumer never perturbs existing streams.
//!
//! The Gaussian sampler deliberately avoids transcendental functions
//! (log/cos as used by Box-Muller): it sums twelve uniforms and subtracts
//! six, which is exact IEEE add/sub arithmetic and therefore bit-stable
//! everywhere. The result has mean 0 and variance 1 with support [-6, 6];
//! the truncated tails are irrelevant at the noise scales used here.

/// Weyl increment: 2^64 / golden ratio, the SplitMix64 constant.
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer: a bijective avalanche mix on 64 bits.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic RNG: a keyed counter fed through the SplitMix64 mixer.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng {
            // Mix the raw seed so that small consecutive seeds (0, 1, 2...)
            // still produce unrelated streams.
            key: mix(seed.wrapping_add(GOLDEN)),
            counter: 0,
        }
    }

    /// A decorrelated child stream. `derive(a) != derive(b)` for `a != b`,
    /// and child streams do not overlap the parent's output sequence.
    pub fn derive(&self, salt: u64) -> Self {
        CounterRng {
            key: mix(self.key ^ mix(salt.wrapping_add(GOLDEN))),
            counter: 0,
        }
    }

    /// Next raw 64-bit value.
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)`. `n` must be nonzero. The modulo bias is
    /// below 2^-50 for the small `n` used in this crate.
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal via the sum of twelve uniforms minus six.
    pub fn normal(&mut self) -> f64 {
        let mut acc = 0.0;
        for _ in 0..12 {
            acc += self.uniform();
        }
        acc - 6.0
    }
}
