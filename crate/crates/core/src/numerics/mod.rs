//! Minimal deterministic numerical substrate.
//!
//! Dense row-major matrices and vectors over `f64`, a seeded splittable
//! random stream, Gaussian sampling, and the standard normal tail
//! function. Everything downstream (training, Monte Carlo, benchmarks)
//! is built on these few pieces so that a `(seed, stream)` pair pins an
//! entire experiment.
//!
//! Shape handling follows a two-level convention: the public
//! operations ([`Matrix::matmul`], [`affine`]) return [`crate::Error::Shape`]
//! on non-conforming operands, while the small vector helpers (`dot`,
//! `add`, ...) treat mismatches as programmer error and assert.

mod matrix;
mod rng;

pub use matrix::{affine, Matrix, Vector};
pub use rng::{gaussian_vector, RngStream};

/// Standard normal tail probability `P(Z > x)`.
///
/// Computed as `erfc(x / sqrt(2)) / 2`; absolute error is well below
/// 1e-10 over the whole real line.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}
