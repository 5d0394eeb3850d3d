//! Deep-unfolded projected-gradient detector for 2x2 BPSK.
//!
//! Each layer runs one gradient step on the box-relaxed least-squares
//! objective ‖r − Hx‖² and clamps to [−1, 1]²; the per-layer step sizes
//! are the trainable parameters, learned by backpropagating through the
//! unrolled iteration (the clamp contributes subgradient 0 at and beyond
//! its boundaries). Detectors persist in the same tagged flat-file
//! layout as networks, under the distinct `format unfolded-1` header.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::nn::{Loss, OptimizerState, TrainConfig, SHUFFLE_STREAM};
use crate::numerics::{gaussian_vector, Matrix, RngStream, Vector};
use crate::{Error, Result};

/// Training data inside [`train_unfolded`] draws from this stream of
/// `cfg.seed` (0 = init, 1 = shuffle, 2 = detection data, 3 = holdout
/// split, 4 = unfolding data).
const UNFOLD_DATA_STREAM: u64 = 4;

/// Gradient steps never push a step size below this floor, keeping the
/// positivity invariant under unconstrained updates. The floor never
/// exceeds a step's initial value, so a zero learning rate leaves every
/// step size untouched.
const STEP_FLOOR: f64 = 1e-6;

const UNFOLDED_FORMAT: &str = "unfolded-1";

/// BPSK hypotheses in tie-break order: on equal metrics the lowest index
/// wins.
const HYPOTHESES: [[f64; 2]; 4] = [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];

/// Unrolled projected-gradient iteration: a 2x2 channel matrix plus one
/// trainable step size per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedDetector {
    channel: Matrix,
    step_sizes: Vec<f64>,
}

fn check_channel(channel: &Matrix) -> Result<()> {
    if channel.shape() != (2, 2) {
        return Err(Error::Shape {
            op: "unfolded detector channel",
            left: channel.shape(),
            right: (2, 2),
        });
    }
    if channel.as_slice().iter().any(|h| !h.is_finite()) {
        return Err(Error::invalid("channel entries must be finite"));
    }
    Ok(())
}

impl UnfoldedDetector {
    pub fn new(channel: Matrix, step_sizes: Vec<f64>) -> Result<Self> {
        check_channel(&channel)?;
        if step_sizes.is_empty() {
            return Err(Error::invalid("unfolded detector needs at least one layer"));
        }
        if let Some(bad) = step_sizes.iter().find(|a| !a.is_finite() || **a <= 0.0) {
            return Err(Error::invalid(format!(
                "step sizes must be positive and finite, got {bad}"
            )));
        }
        Ok(Self { channel, step_sizes })
    }

    /// `layers` copies of the same step size.
    pub fn uniform(channel: Matrix, layers: usize, step: f64) -> Result<Self> {
        Self::new(channel, vec![step; layers])
    }

    /// Same step sizes, different channel.
    pub fn with_channel(&self, channel: Matrix) -> Result<Self> {
        Self::new(channel, self.step_sizes.clone())
    }

    pub fn channel(&self) -> &Matrix {
        &self.channel
    }

    pub fn step_sizes(&self) -> &[f64] {
        &self.step_sizes
    }

    pub fn layers(&self) -> usize {
        self.step_sizes.len()
    }

    /// Runs the unrolled iteration x⁰ = 0,
    /// xᵏ = clamp(xᵏ⁻¹ − α_k·Hᵀ(H xᵏ⁻¹ − r), −1, 1) and returns the final
    /// iterate, always inside [−1, 1]².
    pub fn forward(&self, received: &Vector) -> Result<Vector> {
        forward_with(&self.channel, &self.step_sizes, received)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let _ = writeln!(out, "format {UNFOLDED_FORMAT}");
        let _ = writeln!(out, "layers {}", self.layers());
        let h = self.channel.as_slice();
        let _ = writeln!(out, "channel {} {} {} {}", h[0], h[1], h[2], h[3]);
        for a in &self.step_sizes {
            let _ = writeln!(out, "{a}");
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate();

        let mut field = |tag: &'static str| -> Result<(usize, Vec<String>)> {
            let (idx, line) = lines
                .next()
                .ok_or_else(|| Error::invalid(format!("missing {tag:?} line")))?;
            let line_no = idx + 1;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(tag) {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {tag:?} line, got {line:?}"),
                });
            }
            Ok((line_no, parts.map(str::to_owned).collect()))
        };

        let (line_no, version) = field("format")?;
        if version != [UNFOLDED_FORMAT.to_string()] {
            return Err(Error::Parse {
                line: line_no,
                message: format!("unsupported format version {version:?}"),
            });
        }
        let (line_no, layers) = field("layers")?;
        let layer_count: usize = match layers.as_slice() {
            [one] => one.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid layer count {one:?}"),
            })?,
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected a single layer count, got {other:?}"),
                })
            }
        };
        let (line_no, entries) = field("channel")?;
        if entries.len() != 4 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("channel line needs 4 entries, got {}", entries.len()),
            });
        }
        let mut h = Vec::with_capacity(4);
        for e in &entries {
            h.push(e.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid channel entry {e:?}"),
            })?);
        }

        let mut steps = Vec::with_capacity(layer_count);
        let mut last_line = line_no;
        for (idx, line) in lines {
            last_line = idx + 1;
            if line.is_empty() {
                continue;
            }
            let a: f64 = line.trim().parse().map_err(|_| Error::Parse {
                line: last_line,
                message: format!("invalid step size {line:?}"),
            })?;
            steps.push(a);
        }
        if steps.len() != layer_count {
            return Err(Error::Parse {
                line: last_line,
                message: format!("expected {layer_count} step sizes, found {}", steps.len()),
            });
        }
        Self::new(Matrix::from_vec(2, 2, h)?, steps)
    }
}

fn check_received(op: &'static str, received: &Vector) -> Result<()> {
    if received.dim() != 2 {
        return Err(Error::Shape {
            op,
            left: (received.dim(), 1),
            right: (2, 1),
        });
    }
    Ok(())
}

/// Gradient of ½‖r − Hx‖² at x, namely Hᵀ(Hx − r).
fn descent_direction(h: &Matrix, x: &Vector, r: &Vector) -> Result<Vector> {
    h.mul_vec_t(&h.mul_vec(x)?.sub(r))
}

fn clamp_box(u: &Vector) -> Vector {
    Vector::new(u.iter().map(|v| v.clamp(-1.0, 1.0)).collect())
}

fn forward_with(h: &Matrix, steps: &[f64], received: &Vector) -> Result<Vector> {
    check_received("unfolded forward", received)?;
    let mut x = Vector::zeros(2);
    for &alpha in steps {
        let g = descent_direction(h, &x, received)?;
        x = clamp_box(&x.sub(&g.scale(alpha)));
    }
    Ok(x)
}

/// A draw of (channel, observation, transmitted symbols): r = Hx + n with
/// x uniform on {±1}².
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldingSample {
    pub channel: Matrix,
    pub received: Vector,
    pub symbols: Vector,
}

/// A 2x2 matrix of i.i.d. standard normal entries.
pub fn gaussian_channel(rng: &mut RngStream) -> Matrix {
    let entries = gaussian_vector(4, 1.0, rng).expect("unit variance is valid");
    Matrix::from_vec(2, 2, entries.into_vec()).expect("gaussian draws are finite")
}

/// Draws `t` samples, each with its own channel from `channel_sampler`
/// and additive per-component noise of the given variance.
pub fn generate_unfolding_samples<C>(
    mut channel_sampler: C,
    noise_variance: f64,
    t: usize,
    rng: &mut RngStream,
) -> Result<Vec<UnfoldingSample>>
where
    C: FnMut(&mut RngStream) -> Matrix,
{
    if t == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let mut samples = Vec::with_capacity(t);
    for _ in 0..t {
        let channel = channel_sampler(rng);
        check_channel(&channel)?;
        let symbols = Vector::new(
            (0..2)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect(),
        );
        let noise = gaussian_vector(2, noise_variance, rng)?;
        let received = channel.mul_vec(&symbols)?.add(&noise);
        samples.push(UnfoldingSample {
            channel,
            received,
            symbols,
        });
    }
    Ok(samples)
}

fn mse_with_steps(steps: &[f64], samples: &[UnfoldingSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("MSE over an empty sample set is undefined"));
    }
    let mut total = 0.0;
    for s in samples {
        let out = forward_with(&s.channel, steps, &s.received)?;
        total += out.dist_sq(&s.symbols);
    }
    Ok(total / samples.len() as f64)
}

/// Mean of ‖x̂ − x‖² over the samples, running the detector's step sizes
/// on each sample's own channel (the template channel is ignored).
pub fn unfolded_mse(d: &UnfoldedDetector, samples: &[UnfoldingSample]) -> Result<f64> {
    mse_with_steps(&d.step_sizes, samples)
}

/// Brute-force maximum likelihood for 2x2 BPSK: the hypothesis in {±1}²
/// minimizing ‖r − Hx‖², lowest index on ties.
pub fn exhaustive_ml_bpsk(channel: &Matrix, received: &Vector) -> Result<Vector> {
    check_channel(channel)?;
    check_received("exhaustive ML", received)?;
    let mut best = 0;
    let mut best_metric = f64::INFINITY;
    for (i, bits) in HYPOTHESES.iter().enumerate() {
        let x = Vector::new(bits.to_vec());
        let metric = received.dist_sq(&channel.mul_vec(&x)?);
        if metric < best_metric {
            best_metric = metric;
            best = i;
        }
    }
    Ok(Vector::new(HYPOTHESES[best].to_vec()))
}

/// Per-sample loss ‖x^D − s‖² and its gradient with respect to the step
/// sizes, accumulated into `grad`. Backpropagates through the unrolled
/// iteration: the clamp passes gradient only strictly inside the box, and
/// through u = (I − α_k·HᵀH)x + α_k·Hᵀr each layer contributes
/// ∂L/∂α_k = −δ_u·g_k and δ_x = (I − α_k·HᵀH)δ_u.
fn sample_grad(steps: &[f64], sample: &UnfoldingSample, grad: &mut [f64]) -> Result<f64> {
    let h = &sample.channel;
    let depth = steps.len();
    let mut xs = Vec::with_capacity(depth + 1);
    let mut gs = Vec::with_capacity(depth);
    let mut us = Vec::with_capacity(depth);
    xs.push(Vector::zeros(2));
    for k in 0..depth {
        let g = descent_direction(h, &xs[k], &sample.received)?;
        let u = xs[k].sub(&g.scale(steps[k]));
        xs.push(clamp_box(&u));
        gs.push(g);
        us.push(u);
    }
    let err = xs[depth].sub(&sample.symbols);
    let loss = err.norm_sq();
    let mut delta = err.scale(2.0);
    for k in (0..depth).rev() {
        let du = Vector::new(
            (0..2)
                .map(|i| if us[k][i].abs() < 1.0 { delta[i] } else { 0.0 })
                .collect(),
        );
        grad[k] -= du.dot(&gs[k]);
        delta = du.sub(&h.mul_vec_t(&h.mul_vec(&du)?)?.scale(steps[k]));
    }
    Ok(loss)
}

/// Optimizes the step sizes by mini-batch gradient descent on the mean of
/// ‖x̂ − x‖² over `t` generated samples, starting from `d`'s current
/// values. Data comes from stream 4 of `cfg.seed`, shuffling from stream
/// 1; runs are deterministic by seed. Returns the trained detector
/// (template channel preserved) and the full-set loss after each epoch.
pub fn train_unfolded<C>(
    d: &UnfoldedDetector,
    channel_sampler: C,
    noise_variance: f64,
    t: usize,
    cfg: &TrainConfig,
) -> Result<(UnfoldedDetector, Vec<f64>)>
where
    C: FnMut(&mut RngStream) -> Matrix,
{
    if cfg.loss != Loss::Mse {
        return Err(Error::invalid(
            "unfolded training minimizes squared error; configure the squared-error loss",
        ));
    }
    cfg.validate(t)?;
    let mut data_rng = RngStream::new(cfg.seed, UNFOLD_DATA_STREAM);
    let samples = generate_unfolding_samples(channel_sampler, noise_variance, t, &mut data_rng)?;

    let mut steps = d.step_sizes.clone();
    let floors: Vec<f64> = steps.iter().map(|a| a.min(STEP_FLOOR)).collect();
    let mut optimizer = OptimizerState::new(cfg.optimizer, steps.len());
    let mut shuffle_rng = RngStream::new(cfg.seed, SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(cfg.batch_size) {
            let mut grad = vec![0.0; steps.len()];
            for &idx in chunk {
                sample_grad(&steps, &samples[idx], &mut grad)?;
            }
            for g in &mut grad {
                *g /= chunk.len() as f64;
            }
            optimizer.apply(&mut steps, &grad, cfg.learning_rate);
            for (a, &floor) in steps.iter_mut().zip(&floors) {
                *a = a.max(floor);
            }
        }
        let loss = mse_with_steps(&steps, &samples)?;
        if !loss.is_finite() {
            return Err(Error::TrainingDiverged { epoch });
        }
        history.push(loss);
    }
    let trained = UnfoldedDetector::new(d.channel.clone(), steps)?;
    Ok((trained, history))
}

/// Pooled bit-error rates of the unfolded detector (sign decision, zero
/// counts as +1) and exhaustive ML over freshly drawn samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnfoldedEvaluation {
    pub detector_ber: f64,
    pub ml_ber: f64,
    pub trials: usize,
}

pub fn evaluate_unfolded<C>(
    d: &UnfoldedDetector,
    channel_sampler: C,
    noise_variance: f64,
    trials: usize,
    rng: &mut RngStream,
) -> Result<UnfoldedEvaluation>
where
    C: FnMut(&mut RngStream) -> Matrix,
{
    let samples = generate_unfolding_samples(channel_sampler, noise_variance, trials, rng)?;
    let mut detector_errors = 0usize;
    let mut ml_errors = 0usize;
    for s in &samples {
        let soft = forward_with(&s.channel, &d.step_sizes, &s.received)?;
        let ml = exhaustive_ml_bpsk(&s.channel, &s.received)?;
        for i in 0..2 {
            let hard = if soft[i] >= 0.0 { 1.0 } else { -1.0 };
            if hard != s.symbols[i] {
                detector_errors += 1;
            }
            if ml[i] != s.symbols[i] {
                ml_errors += 1;
            }
        }
    }
    let bits = (2 * trials) as f64;
    Ok(UnfoldedEvaluation {
        detector_ber: detector_errors as f64 / bits,
        ml_ber: ml_errors as f64 / bits,
        trials,
    })
}
