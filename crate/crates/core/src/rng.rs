//! Seeded random sources.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! 64-bit seed and a stream id, so independent consumers (dataset, weights,
//! search candidates) never share a sequence.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type SeededRng = ChaCha8Rng;

/// Stream ids used by the experiment pipeline.
pub mod stream {
    pub const DATASET: u64 = 1;
    pub const WEIGHTS: u64 = 2;
    pub const SEARCH: u64 = 3;
    pub const CANDIDATE_BASE: u64 = 1 << 32;
}

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn seeded_stream(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw on `[-1, 1]` from the generator's unit-interval output.
#[inline]
pub fn symmetric_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    2.0 * rng.random::<f64>() - 1.0
}

/// Uniform draw on `[lo, hi)`.
#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Uniform draw on the open interval `(0, hi)`; zero is rejected.
pub fn open_unit_scaled<R: Rng + ?Sized>(rng: &mut R, hi: f64) -> f64 {
    loop {
        let v: f64 = rng.random();
        if v > 0.0 {
            return v * hi;
        }
    }
}
