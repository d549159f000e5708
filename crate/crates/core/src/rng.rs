//! Counter-based seed derivation and the SplitMix64 generator.
//!
//! Feature `t` of a model is drawn from its own generator seeded with
//! `derive_seed(master_seed, t)`, so any feature can be regenerated in O(1)
//! without replaying the ones before it. The mixing function and the uniform
//! and Gaussian transforms are fixed so that trajectories are reproducible
//! bit-for-bit across implementations.

use std::f64::consts::TAU;

pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the `counter`-th stream under `master`.
#[inline]
pub fn derive_seed(master: u64, counter: u64) -> u64 {
    mix64(master ^ counter.wrapping_mul(GOLDEN_GAMMA))
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Pair of independent standard normals (Box-Muller).
    pub fn next_gaussian_pair(&mut self) -> (f64, f64) {
        // 1 - u lies in (0, 1], keeping the log finite.
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (TAU * u2).sin_cos();
        (r * c, r * s)
    }

    /// Fills `out` with standard normals, consuming one Box-Muller pair per
    /// two entries (the last sine is discarded for odd lengths).
    pub fn fill_gaussian(&mut self, out: &mut [f64]) {
        for chunk in out.chunks_mut(2) {
            let (a, b) = self.next_gaussian_pair();
            chunk[0] = a;
            if let Some(slot) = chunk.get_mut(1) {
                *slot = b;
            }
        }
    }

    pub fn next_gaussian(&mut self) -> f64 {
        self.next_gaussian_pair().0
    }

    /// Uniform on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn integer(&mut self, lo: usize, hi: usize) -> usize {
        debug_assert!(lo <= hi);
        let span = (hi - lo + 1) as u64;
        lo + (self.next_u64() % span) as usize
    }
}
