//! Counter-based Gaussian noise.
//!
//! Every deviate has an address `(trajectory, step, component)`. Trajectory `t` owns ChaCha8
//! stream `t` under the experiment seed; inside the stream the deviate at `(step, component)`
//! sits at linear index `(step + 1) * dim + component`, so step `-1` is a valid address (used
//! for the initial noise of the non-Markovian scheme). Consecutive index pairs are one
//! Box-Muller pair built from two 64-bit words, which keeps the mapping from address to value
//! fixed no matter in which order or on which worker the values are requested.

use std::f64::consts::TAU;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Seed-level noise source; cheap to copy, shared by all workers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseStream {
    seed: u64,
    dim: usize,
}

impl NoiseStream {
    pub fn new(seed: u64, dim: usize) -> Self {
        assert!(dim > 0, "noise dimension must be positive");
        NoiseStream { seed, dim }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stateless lookup of a single deviate.
    pub fn deviate(&self, trajectory: u64, step: i64, component: usize) -> f64 {
        assert!(component < self.dim, "component out of range");
        self.trajectory(trajectory).deviate_at(step, component)
    }

    /// Sequential reader for one trajectory.
    pub fn trajectory(&self, trajectory: u64) -> TrajectoryNoise {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trajectory);
        TrajectoryNoise {
            rng,
            dim: self.dim,
            next_pair: 0,
            cached_pair: u128::MAX,
            cached: (0.0, 0.0),
        }
    }
}

/// Reader over one trajectory's stream; random access is allowed but sequential access is
/// the fast path.
#[derive(Debug, Clone)]
pub struct TrajectoryNoise {
    rng: ChaCha8Rng,
    dim: usize,
    /// Pair index the generator is currently positioned at.
    next_pair: u128,
    cached_pair: u128,
    cached: (f64, f64),
}

impl TrajectoryNoise {
    /// Fills `out` (length `dim`) with the deviates of `step`.
    pub fn fill(&mut self, step: i64, out: &mut [f64]) {
        assert_eq!(out.len(), self.dim, "noise buffer has wrong length");
        let base = self.linear_index(step, 0);
        for (c, v) in out.iter_mut().enumerate() {
            *v = self.at_index(base + c as u128);
        }
    }

    pub fn deviate_at(&mut self, step: i64, component: usize) -> f64 {
        let idx = self.linear_index(step, component);
        self.at_index(idx)
    }

    fn linear_index(&self, step: i64, component: usize) -> u128 {
        assert!(step >= -1, "steps are addressed from -1");
        (step + 1) as u128 * self.dim as u128 + component as u128
    }

    #[inline]
    fn at_index(&mut self, idx: u128) -> f64 {
        let pair = idx / 2;
        if pair != self.cached_pair {
            if pair != self.next_pair {
                // two u64 words = four u32 words per pair
                self.rng.set_word_pos(pair * 4);
            }
            let w1 = self.rng.next_u64();
            let w2 = self.rng.next_u64();
            self.cached = box_muller(w1, w2);
            self.cached_pair = pair;
            self.next_pair = pair + 1;
        }
        if idx % 2 == 0 {
            self.cached.0
        } else {
            self.cached.1
        }
    }
}

#[inline]
fn box_muller(w1: u64, w2: u64) -> (f64, f64) {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    // u1 in (0, 1], u2 in [0, 1)
    let u1 = ((w1 >> 11) + 1) as f64 * SCALE;
    let u2 = (w2 >> 11) as f64 * SCALE;
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (TAU * u2).sin_cos();
    (r * c, r * s)
}
