//! Seeded random streams.
//!
//! ChaCha8 is used everywhere because its output is specified independently
//! of platform and crate version, unlike `StdRng`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Pipeline stages, each drawing from its own stream of the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Schema = 0,
    Dependencies = 1,
    Parameters = 2,
    Skeleton = 3,
    Sampling = 4,
}

pub fn seeded(seed: u64) -> Stream {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn stage_stream(seed: u64, stage: Stage) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stage as u64);
    rng
}

/// Poisson draw by sequential inversion of the CDF.
///
/// Uses one uniform per draw, so the consumed stream does not depend on the
/// float environment beyond `exp`.
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, lambda: f64) -> usize {
    debug_assert!(lambda > 0.0);
    let u: f64 = rng.random();
    let mut k = 0usize;
    let mut p = (-lambda).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= lambda / k as f64;
        let next = cdf + p;
        if next == cdf {
            // tail underflow; u sits above the representable CDF
            break;
        }
        cdf = next;
    }
    k
}

/// Index drawn from unnormalized non-negative weights.
pub fn weighted_index<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if weights.is_empty() || !(total > 0.0) {
        return None;
    }
    let mut r = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if r < *w {
            return Some(i);
        }
        r -= w;
    }
    // rounding left r at the top edge; return the last positive weight
    weights.iter().rposition(|w| *w > 0.0)
}
