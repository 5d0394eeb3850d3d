//! Surrogate approximation of a known algorithm.
//!
//! The concrete algorithm is water-filling power allocation, solved by
//! bisection on the water level. [`generate_algorithm_dataset`] runs any
//! oracle over sampled inputs, [`train_surrogate`] fits a network to the
//! resulting pairs, and [`benchmark_speedup`] times oracle against
//! surrogate on one batch. The deep-unfolded projected-gradient detector
//! lives in [`unfold`](self::unfold), re-exported here.

mod unfold;

pub use unfold::{
    evaluate_unfolded, exhaustive_ml_bpsk, gaussian_channel, generate_unfolding_samples,
    train_unfolded, unfolded_mse, UnfoldedDetector, UnfoldedEvaluation, UnfoldingSample,
};

use std::time::Instant;

use rand::Rng;

use crate::dataset::TrainingSet;
use crate::nn::{train, Activation, Network, TrainConfig};
use crate::numerics::{Matrix, RngStream, Vector};
use crate::{Error, Result};

/// Power allocation across parallel channels: gains g_k and a total power
/// budget P.
#[derive(Debug, Clone, PartialEq)]
pub struct WaterfillingProblem {
    gains: Vector,
    total_power: f64,
}

impl WaterfillingProblem {
    pub fn new(gains: Vector, total_power: f64) -> Result<Self> {
        if gains.dim() == 0 {
            return Err(Error::invalid("water-filling needs at least one channel"));
        }
        if let Some(bad) = gains.iter().find(|g| !g.is_finite() || **g <= 0.0) {
            return Err(Error::invalid(format!(
                "channel gains must be positive and finite, got {bad}"
            )));
        }
        if !total_power.is_finite() || total_power <= 0.0 {
            return Err(Error::invalid(format!(
                "total power must be positive and finite, got {total_power}"
            )));
        }
        Ok(Self { gains, total_power })
    }

    pub fn gains(&self) -> &Vector {
        &self.gains
    }

    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    pub fn channels(&self) -> usize {
        self.gains.dim()
    }
}

/// Optimal power allocation by bisection on the water level μ, with
/// p_k = max(0, μ − 1/g_k).
///
/// The budget Σ p_k lands within `tol` of P; active channels share the
/// water level exactly by construction, since each active p_k is computed
/// as μ − 1/g_k from the final μ.
pub fn waterfill(problem: &WaterfillingProblem, tol: f64) -> Result<Vector> {
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::invalid(format!(
            "water-filling tolerance must be positive, got {tol}"
        )));
    }
    let inverse: Vec<f64> = problem.gains.iter().map(|g| 1.0 / g).collect();
    let floor = inverse.iter().copied().fold(f64::INFINITY, f64::min);
    let budget = problem.total_power;

    // Allocated power is continuous and nondecreasing in μ, zero at the
    // lowest 1/g and at least P once μ clears floor + P.
    let allocated = |mu: f64| -> f64 { inverse.iter().map(|&c| (mu - c).max(0.0)).sum() };
    let (mut lo, mut hi) = (floor, floor + budget);
    let mut mu = 0.5 * (lo + hi);
    for _ in 0..200 {
        mu = 0.5 * (lo + hi);
        let total = allocated(mu);
        if (total - budget).abs() <= 0.5 * tol {
            break;
        }
        if total > budget {
            hi = mu;
        } else {
            lo = mu;
        }
    }
    let total = allocated(mu);
    if (total - budget).abs() > tol {
        return Err(Error::NumericDegeneracy(format!(
            "water level failed to converge: allocated {total} of {budget}"
        )));
    }
    Ok(Vector::new(inverse.iter().map(|&c| (mu - c).max(0.0)).collect()))
}

/// Runs an oracle over sampled inputs and stacks the (input, output)
/// pairs, in draw order, as a training set.
pub fn generate_algorithm_dataset<O, S>(
    oracle: O,
    mut sampler: S,
    t: usize,
    rng: &mut RngStream,
) -> Result<TrainingSet>
where
    O: Fn(&Vector) -> Result<Vector>,
    S: FnMut(&mut RngStream) -> Vector,
{
    if t == 0 {
        return Err(Error::invalid("dataset needs at least one sample"));
    }
    let mut inputs = Vec::with_capacity(t);
    let mut targets = Vec::with_capacity(t);
    for index in 0..t {
        let x = sampler(rng);
        let y = oracle(&x).map_err(|e| {
            Error::invalid(format!("oracle failed on sample {index}: {e}"))
        })?;
        inputs.push(x);
        targets.push(y);
    }
    TrainingSet::from_examples(&inputs, &targets)
}

/// The standard surrogate corpus: `t` water-filling problems with gains
/// i.i.d. uniform on `gain_range` and a fixed power budget, solved at the
/// given tolerance.
pub fn waterfilling_dataset(
    channels: usize,
    gain_range: (f64, f64),
    total_power: f64,
    tol: f64,
    t: usize,
    rng: &mut RngStream,
) -> Result<TrainingSet> {
    let (lo, hi) = gain_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::invalid(format!(
            "gain range ({lo}, {hi}) must be positive and increasing"
        )));
    }
    if channels == 0 {
        return Err(Error::invalid("need at least one channel"));
    }
    let sampler = |rng: &mut RngStream| {
        Vector::new((0..channels).map(|_| rng.random_range(lo..hi)).collect())
    };
    let oracle = |gains: &Vector| {
        waterfill(&WaterfillingProblem::new(gains.clone(), total_power)?, tol)
    };
    generate_algorithm_dataset(oracle, sampler, t, rng)
}

/// Normalized mean squared error Σ‖y − ŷ‖² / Σ‖y‖² of a network over a
/// dataset.
pub fn nmse(net: &Network, data: &TrainingSet) -> Result<f64> {
    let outputs = net.forward_batch(data.inputs())?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (o, y) in outputs.as_slice().iter().zip(data.targets().as_slice()) {
        num += (o - y) * (o - y);
        den += y * y;
    }
    if den == 0.0 {
        return Err(Error::NumericDegeneracy(
            "NMSE undefined for all-zero targets".into(),
        ));
    }
    Ok(num / den)
}

/// Fits a fresh network to 80% of the data and reports NMSE on the held
/// out 20%. The split draws from stream 3 of `cfg.seed`, initialization
/// from stream 0.
pub fn train_surrogate(
    data: &TrainingSet,
    widths: &[usize],
    activations: &[Activation],
    cfg: &TrainConfig,
) -> Result<(Network, f64)> {
    let mut split_rng = RngStream::new(cfg.seed, 3);
    let (train_set, holdout) = data.split(0.2, &mut split_rng)?;
    let mut init_rng = RngStream::new(cfg.seed, 0);
    let net = Network::random(widths, activations, cfg.init, &mut init_rng)?;
    let (net, _) = train(net, &train_set, cfg)?;
    let holdout_nmse = nmse(&net, &holdout)?;
    Ok((net, holdout_nmse))
}

/// Wall-clock comparison of an algorithm and its surrogate on one input
/// batch, plus how far the outputs disagree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedupReport {
    pub oracle_seconds: f64,
    pub surrogate_seconds: f64,
    pub batch_size: usize,
    pub max_deviation: f64,
    pub mean_deviation: f64,
}

impl SpeedupReport {
    pub fn speedup_factor(&self) -> f64 {
        self.oracle_seconds / self.surrogate_seconds
    }
}

/// Times `oracle` against the surrogate's batched forward pass on the
/// same inputs, single-threaded on both sides.
///
/// The oracle receives the whole batch at once so each contender runs in
/// its natural form; input layout is prepared before the clock starts.
/// Warm-up is identical: one untimed full pass each, then one timed pass.
/// Deviations are per-sample Euclidean distances between the two outputs.
pub fn benchmark_speedup<O>(
    oracle: O,
    surrogate: &Network,
    inputs: &[Vector],
) -> Result<SpeedupReport>
where
    O: Fn(&[Vector]) -> Result<Vec<Vector>>,
{
    if inputs.is_empty() {
        return Err(Error::invalid("benchmark needs a nonempty batch"));
    }
    // Averaging a few timed passes keeps one scheduler hiccup from
    // deciding the comparison; both sides get the same treatment.
    const TIMED_PASSES: u32 = 3;
    let batch = Matrix::from_columns(inputs)?;

    let _ = oracle(inputs)?;
    let _ = surrogate.forward_batch(&batch)?;

    let start = Instant::now();
    let oracle_out = oracle(inputs)?;
    for _ in 1..TIMED_PASSES {
        let _ = oracle(inputs)?;
    }
    let oracle_seconds = start.elapsed().as_secs_f64() / f64::from(TIMED_PASSES);

    let start = Instant::now();
    let surrogate_out = surrogate.forward_batch(&batch)?;
    for _ in 1..TIMED_PASSES {
        let _ = surrogate.forward_batch(&batch)?;
    }
    let surrogate_seconds = start.elapsed().as_secs_f64() / f64::from(TIMED_PASSES);

    if oracle_out.len() != inputs.len() {
        return Err(Error::invalid(format!(
            "oracle returned {} outputs for {} inputs",
            oracle_out.len(),
            inputs.len()
        )));
    }
    let mut max_deviation: f64 = 0.0;
    let mut sum_deviation = 0.0;
    for (t, truth) in oracle_out.iter().enumerate() {
        let mut d = 0.0;
        for i in 0..truth.dim() {
            let diff = truth[i] - surrogate_out[(i, t)];
            d += diff * diff;
        }
        let d = d.sqrt();
        max_deviation = max_deviation.max(d);
        sum_deviation += d;
    }
    Ok(SpeedupReport {
        oracle_seconds,
        surrogate_seconds,
        batch_size: inputs.len(),
        max_deviation,
        mean_deviation: sum_deviation / inputs.len() as f64,
    })
}
