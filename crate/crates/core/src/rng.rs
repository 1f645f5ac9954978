//! Seeded random streams.
//!
//! Every random quantity in the crate is drawn from a [`ChaCha8Rng`]. A 64-bit
//! seed is expanded into the 256-bit ChaCha key with `SeedableRng::seed_from_u64`
//! (the PCG32-based expansion of `rand_core` 0.9), and each consumer reads from
//! its own ChaCha stream id:
//!
//! ```text
//! stream_id = (domain tag << 56) | (splitmix64(index) >> 8)
//! ```
//!
//! so a trajectory and a projection matrix drawn from the same seed are
//! independent sub-streams of one key. Gaussian variates use the ziggurat
//! transform of `rand_distr::StandardNormal` on top of that stream; uniform
//! variates use `Rng::random::<f64>()` (53 random mantissa bits in `[0, 1)`).
//! Both are platform independent, so regenerating with the same seed
//! reproduces every draw bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Which consumer a stream belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Domain {
    Chain = 1,
    Rewards = 2,
    Features = 3,
    Projection = 4,
    Trajectory = 5,
    Verify = 6,
}

/// One step of the SplitMix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Folds a master seed and a list of integer keys into a child seed.
///
/// Used by experiment drivers to key a cell (trajectory seed, `n`, `d`, ...)
/// without depending on iteration order.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

/// The `index`-th sub-stream of `domain` under `seed`.
pub fn substream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let id = ((domain as u64) << 56) | (splitmix64(index) >> 8);
    rng.set_stream(id);
    rng
}

/// The default sub-stream of `domain` under `seed`.
pub fn stream(seed: u64, domain: Domain) -> ChaCha8Rng {
    substream(seed, domain, 0)
}

#[inline]
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}
