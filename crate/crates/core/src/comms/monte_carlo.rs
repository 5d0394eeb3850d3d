//! Symbol-error-rate estimation by seeded Monte Carlo.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;

use super::{AwgnChannel, Constellation, Detector};
use crate::numerics::RngStream;
use crate::{Error, Result};

/// Trials are partitioned into fixed-size chunks, each owning one RNG
/// stream. Workers pull whole chunks, so the sampled values depend only on
/// (seed, stream layout) and never on the worker count.
const TRIALS_PER_CHUNK: usize = 1 << 16;

/// Trial budget and randomness plan for one estimation run. Chunk i draws
/// from stream `stream_base + i` of `seed`; plans sharing a seed must
/// space their bases far enough apart (the chunk count is
/// `trials.div_ceil(65536)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarlo {
    pub trials: usize,
    pub seed: u64,
    pub stream_base: u64,
    pub workers: usize,
}

/// Estimated error fraction with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SerEstimate {
    pub ser: f64,
    pub std_err: f64,
    pub trials: usize,
}

/// Draws a uniformly random class each trial, transmits its point through
/// the channel, and counts detector mismatches.
pub fn ser_monte_carlo(
    detector: &dyn Detector,
    constellation: &Constellation,
    noise_variance: f64,
    mc: &MonteCarlo,
) -> Result<SerEstimate> {
    if mc.trials == 0 {
        return Err(Error::invalid("Monte Carlo needs at least one trial"));
    }
    if mc.workers == 0 {
        return Err(Error::invalid("Monte Carlo needs at least one worker"));
    }
    let channel = AwgnChannel::new(noise_variance)?;
    let chunk_count = mc.trials.div_ceil(TRIALS_PER_CHUNK);
    let next_chunk = AtomicUsize::new(0);

    let run_chunk = |index: usize| -> usize {
        let lo = index * TRIALS_PER_CHUNK;
        let hi = ((index + 1) * TRIALS_PER_CHUNK).min(mc.trials);
        let mut rng = RngStream::new(mc.seed, mc.stream_base + index as u64);
        let mut errors = 0;
        for _ in lo..hi {
            let class = rng.random_range(0..constellation.len());
            let received = channel
                .transmit(constellation.point(class), &mut rng)
                .expect("validated channel and points");
            if detector.classify(&received) != class {
                errors += 1;
            }
        }
        errors
    };

    let errors: usize = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..mc.workers.min(chunk_count))
            .map(|_| {
                scope.spawn(|| {
                    let mut local = 0;
                    loop {
                        let index = next_chunk.fetch_add(1, Ordering::Relaxed);
                        if index >= chunk_count {
                            return local;
                        }
                        local += run_chunk(index);
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).sum()
    });

    let ser = errors as f64 / mc.trials as f64;
    let std_err = (ser * (1.0 - ser) / mc.trials as f64).sqrt();
    Ok(SerEstimate {
        ser,
        std_err,
        trials: mc.trials,
    })
}
