//! Deterministic, splittable random streams.
//!
//! Every realization `r` of an ensemble draws from `child(seed, r)`: a ChaCha8
//! generator keyed by the master seed with the realization index as its stream
//! id. Streams are independent and addressable in any order, so parallel
//! sweeps reproduce bit-for-bit regardless of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Debug)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::child(seed, 0)
    }

    /// Stream `index` of the family keyed by `seed`.
    pub fn child(seed: u64, index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(index);
        Self { inner }
    }

    /// Standard normal deviate.
    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform deviate in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }
}
