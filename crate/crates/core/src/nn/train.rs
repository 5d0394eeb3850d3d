//! Mini-batch gradient descent over a training set.

use rand::seq::SliceRandom;

use super::{Loss, Network, WeightInit};
use crate::dataset::TrainingSet;
use crate::numerics::{Matrix, RngStream};
use crate::{Error, Result};

/// Shuffling inside [`train`] draws from this stream of `cfg.seed`;
/// stream 0 is reserved for parameter initialization by the caller.
pub(crate) const SHUFFLE_STREAM: u64 = 1;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPSILON: f64 = 1e-8;

/// Parameter update rule. Adam uses the standard moment constants
/// (0.9, 0.999, 1e-8).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Optimizer {
    Sgd,
    Adam,
}

/// Everything [`train`] needs beyond the data: update rule, step size,
/// batching, duration, loss, and the seed that fixes shuffling (stream 1)
/// and, by caller convention, initialization (stream 0).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub init: WeightInit,
    pub loss: Loss,
}

impl TrainConfig {
    /// Adam with its customary 1e-3 step size.
    pub fn adam(loss: Loss, batch_size: usize, epochs: usize, seed: u64) -> Self {
        Self {
            optimizer: Optimizer::Adam,
            learning_rate: 1e-3,
            batch_size,
            epochs,
            seed,
            init: WeightInit::ScaledUniform,
            loss,
        }
    }

    pub(crate) fn validate(&self, examples: usize) -> Result<()> {
        // Zero is allowed so "no updates" stays expressible; negative or
        // non-finite rates are configuration mistakes.
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.batch_size > examples {
            return Err(Error::invalid(format!(
                "batch size {} must lie in 1..={examples}",
                self.batch_size
            )));
        }
        Ok(())
    }
}

pub(crate) struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

pub(crate) enum OptimizerState {
    Sgd,
    Adam(AdamState),
}

impl OptimizerState {
    pub(crate) fn new(kind: Optimizer, dim: usize) -> Self {
        match kind {
            Optimizer::Sgd => OptimizerState::Sgd,
            Optimizer::Adam => OptimizerState::Adam(AdamState {
                m: vec![0.0; dim],
                v: vec![0.0; dim],
                step: 0,
            }),
        }
    }

    pub(crate) fn apply(&mut self, theta: &mut [f64], grad: &[f64], rate: f64) {
        match self {
            OptimizerState::Sgd => {
                for (t, g) in theta.iter_mut().zip(grad) {
                    *t -= rate * g;
                }
            }
            OptimizerState::Adam(state) => {
                state.step += 1;
                let bias1 = 1.0 - ADAM_BETA1.powi(state.step as i32);
                let bias2 = 1.0 - ADAM_BETA2.powi(state.step as i32);
                for i in 0..theta.len() {
                    let g = grad[i];
                    state.m[i] = ADAM_BETA1 * state.m[i] + (1.0 - ADAM_BETA1) * g;
                    state.v[i] = ADAM_BETA2 * state.v[i] + (1.0 - ADAM_BETA2) * g * g;
                    let m_hat = state.m[i] / bias1;
                    let v_hat = state.v[i] / bias2;
                    theta[i] -= rate * m_hat / (v_hat.sqrt() + ADAM_EPSILON);
                }
            }
        }
    }
}

/// Copies the listed examples into contiguous batch matrices.
fn gather(data: &TrainingSet, idx: &[usize]) -> (Matrix, Matrix) {
    let bx = Matrix::from_fn(data.input_dim(), idx.len(), |i, j| {
        data.inputs()[(i, idx[j])]
    });
    let by = Matrix::from_fn(data.target_dim(), idx.len(), |i, j| {
        data.targets()[(i, idx[j])]
    });
    (bx, by)
}

/// Runs `cfg.epochs` of shuffled mini-batch optimization and returns the
/// trained network plus the full-set loss after each epoch.
///
/// The incoming parameters are the starting point; `train` never
/// re-initializes, so a zero learning rate returns them untouched. If an
/// epoch ends with a non-finite loss the run aborts with the 1-based epoch
/// index.
pub fn train(net: Network, data: &TrainingSet, cfg: &TrainConfig) -> Result<(Network, Vec<f64>)> {
    cfg.validate(data.len())?;
    // Surface shape/precondition problems before any work.
    cfg.loss.evaluate(&net, data)?;

    let mut net = net;
    let mut theta = net.params();
    let mut optimizer = OptimizerState::new(cfg.optimizer, theta.len());
    let mut shuffle_rng = RngStream::new(cfg.seed, SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(cfg.batch_size) {
            let (bx, by) = gather(data, chunk);
            let grad = net.grad_batch(&bx, &by, cfg.loss)?;
            optimizer.apply(&mut theta, &grad, cfg.learning_rate);
            net.set_params(&theta);
        }
        let loss = cfg.loss.evaluate(&net, data)?;
        if !loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        history.push(loss);
    }
    Ok((net, history))
}
