use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Vector;
use crate::{Error, Result};

/// Deterministic random source identified by a `(seed, stream)` pair.
///
/// Distinct streams from the same seed are independent, which is what lets
/// Monte Carlo work be partitioned across workers without changing the
/// sampled values: each chunk owns a stream id, so results depend only on
/// the chunk layout, never on the worker count.
pub struct RngStream {
    inner: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha12Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        Self { inner }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest);
    }
}

/// Samples a vector of independent zero-mean Gaussians with the given
/// variance. Zero variance yields the zero vector.
pub fn gaussian_vector(dim: usize, variance: f64, rng: &mut RngStream) -> Result<Vector> {
    if !(variance >= 0.0) {
        return Err(Error::invalid(format!(
            "gaussian variance must be non-negative, got {variance}"
        )));
    }
    let std_dev = variance.sqrt();
    let mut out = Vec::with_capacity(dim);
    for _ in 0..dim {
        let z: f64 = StandardNormal.sample(rng);
        out.push(std_dev * z);
    }
    Ok(Vector::new(out))
}
