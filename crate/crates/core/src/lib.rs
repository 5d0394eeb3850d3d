//! From-scratch dense feed-forward networks and the physical-layer
//! experiments built on top of them.
//!
//! The crate is organized as a small numerical substrate plus four
//! experiment domains:
//!
//! - [`numerics`]: row-major `f64` matrices/vectors, seeded splittable
//!   random streams, Gaussian sampling, and the normal tail function.
//! - [`nn`]: dense layers, forward/backward passes, losses, and a
//!   mini-batch SGD/Adam training loop, all reproducible from a seed.
//! - [`dataset`]: column-stacked training sets with CSV persistence and
//!   seeded holdout splits.
//! - [`comms`]: QPSK over AWGN with minimum-distance and learned
//!   detectors, Monte Carlo symbol-error-rate estimation, and decision
//!   region rasterization.
//! - [`approx`]: surrogate training for a known algorithm (water-filling
//!   power allocation) plus a deep-unfolded projected-gradient detector
//!   and oracle-vs-surrogate speed benchmarks.
//! - [`invert`]: memoryless nonlinearities, Bussgang decomposition, and
//!   learned inversion compared against the Bussgang linear equalizer.
//!
//! Every randomized operation takes an explicit [`numerics::RngStream`];
//! identical `(seed, stream)` pairs reproduce results bit for bit.

pub mod approx;
pub mod comms;
pub mod dataset;
mod error;
pub mod invert;
pub mod nn;
pub mod numerics;

pub use error::{Error, Result};
