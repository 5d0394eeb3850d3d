//! Dense feed-forward networks with explicit backpropagation and a
//! mini-batch SGD/Adam training loop.
//!
//! A [`Network`] is an ordered stack of [`DenseLayer`]s, each computing
//! `σ(W x + b)`. All parameters flatten into one vector in a fixed order:
//! layer 1 weights row-major, then layer 1 bias, then layer 2 weights, and
//! so on. [`Network::params`], [`Network::set_params`], and the gradients
//! from [`Network::backward`] share this layout, so the flattened gradient
//! always has exactly [`Network::param_count`] entries.
//!
//! Seed convention: stream 0 of an experiment seed initializes parameters,
//! stream 1 drives shuffling inside [`train`]. Higher streams are free for
//! data generation.

mod grad;
mod io;
mod train;

pub use grad::{cross_entropy_loss, mse_loss, Loss};
pub use train::{train, Optimizer, TrainConfig};

pub(crate) use train::{OptimizerState, SHUFFLE_STREAM};

use rand::Rng;

use crate::numerics::{affine, Matrix, RngStream, Vector};
use crate::{Error, Result};

/// Layer nonlinearity. All kinds act element-wise except `Softmax`, which
/// normalizes a whole output vector and is only valid on the final layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
    Softmax,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Softmax => "softmax",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "identity" => Activation::Identity,
            "relu" => Activation::Relu,
            "tanh" => Activation::Tanh,
            "sigmoid" => Activation::Sigmoid,
            "softmax" => Activation::Softmax,
            _ => return None,
        })
    }

    /// Applies the activation to one pre-activation vector in place.
    fn apply(self, z: &mut [f64]) {
        match self {
            Activation::Identity => {}
            Activation::Relu => {
                for v in z {
                    *v = v.max(0.0);
                }
            }
            Activation::Tanh => {
                for v in z {
                    *v = v.tanh();
                }
            }
            Activation::Sigmoid => {
                for v in z {
                    *v = 1.0 / (1.0 + (-*v).exp());
                }
            }
            Activation::Softmax => {
                // Max subtraction keeps the exponentials bounded.
                let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for v in z.iter_mut() {
                    *v = (*v - max).exp();
                    sum += *v;
                }
                for v in z {
                    *v /= sum;
                }
            }
        }
    }

    /// Applies the activation to every column of a pre-activation batch.
    fn apply_batch(self, z: &mut Matrix) {
        match self {
            Activation::Softmax => {
                let (rows, cols) = z.shape();
                for j in 0..cols {
                    let max = (0..rows).map(|i| z[(i, j)]).fold(f64::NEG_INFINITY, f64::max);
                    let mut sum = 0.0;
                    for i in 0..rows {
                        let e = (z[(i, j)] - max).exp();
                        z[(i, j)] = e;
                        sum += e;
                    }
                    for i in 0..rows {
                        z[(i, j)] /= sum;
                    }
                }
            }
            _ => self.apply(z.as_mut_slice()),
        }
    }
}

/// How fresh layer weights are drawn. Biases always start at zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightInit {
    /// Uniform on (−a, a) with a = sqrt(6 / (n_in + n_out)), which keeps
    /// activation scale roughly constant across layers.
    ScaledUniform,
}

impl WeightInit {
    fn sample(self, n_out: usize, n_in: usize, rng: &mut RngStream) -> Matrix {
        match self {
            WeightInit::ScaledUniform => {
                let a = (6.0 / (n_in + n_out) as f64).sqrt();
                Matrix::from_fn(n_out, n_in, |_, _| rng.random_range(-a..a))
            }
        }
    }
}

/// One dense layer: `σ(W x + b)` with W of shape n_out × n_in.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    weights: Matrix,
    bias: Vector,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vector, activation: Activation) -> Result<Self> {
        if weights.rows() != bias.dim() {
            return Err(Error::Shape {
                op: "dense layer",
                left: weights.shape(),
                right: (bias.dim(), 1),
            });
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn weights(&self) -> &Matrix {
        &self.weights
    }

    pub fn bias(&self) -> &Vector {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// σ(W x + b) for a single input.
    pub fn forward(&self, x: &Vector) -> Result<Vector> {
        let mut out = affine(&self.weights, x, &self.bias)?;
        self.activation.apply(out.as_mut_slice());
        Ok(out)
    }

    /// σ(W A + b 1ᵀ) for a batch of inputs stacked as columns.
    pub fn forward_batch(&self, a: &Matrix) -> Result<Matrix> {
        let mut z = self.weights.matmul(a)?;
        let cols = z.cols();
        for (i, row) in z.as_mut_slice().chunks_exact_mut(cols).enumerate() {
            let b = self.bias[i];
            for v in row {
                *v += b;
            }
        }
        self.activation.apply_batch(&mut z);
        Ok(z)
    }
}

/// A feed-forward network: the composition of its layers, applied left to
/// right.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<DenseLayer>,
}

impl Network {
    /// Validates width chaining and the softmax-on-output-only rule.
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("a network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].output_dim() != pair[1].input_dim() {
                return Err(Error::Shape {
                    op: "layer chaining",
                    left: pair[0].weights.shape(),
                    right: pair[1].weights.shape(),
                });
            }
        }
        if layers[..layers.len() - 1]
            .iter()
            .any(|l| l.activation == Activation::Softmax)
        {
            return Err(Error::invalid(
                "softmax is only valid on the output layer",
            ));
        }
        Ok(Self { layers })
    }

    /// Fresh network with seeded weights and zero biases. `widths` lists
    /// n_0..n_L, so `activations` must have one entry fewer.
    pub fn random(
        widths: &[usize],
        activations: &[Activation],
        init: WeightInit,
        rng: &mut RngStream,
    ) -> Result<Self> {
        if widths.len() < 2 || activations.len() != widths.len() - 1 {
            return Err(Error::invalid(format!(
                "{} widths require {} activations, got {}",
                widths.len(),
                widths.len().saturating_sub(1),
                activations.len()
            )));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::invalid("layer widths must be positive"));
        }
        let mut layers = Vec::with_capacity(activations.len());
        for (l, &act) in activations.iter().enumerate() {
            let (n_in, n_out) = (widths[l], widths[l + 1]);
            let weights = init.sample(n_out, n_in, rng);
            layers.push(DenseLayer::new(weights, Vector::zeros(n_out), act)?);
        }
        Self::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].output_dim()
    }

    /// Layer widths n_0..n_L.
    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim()];
        w.extend(self.layers.iter().map(|l| l.output_dim()));
        w
    }

    /// Left-to-right composition of the layers.
    pub fn forward(&self, x: &Vector) -> Result<Vector> {
        let mut a = self.layers[0].forward(x)?;
        for layer in &self.layers[1..] {
            a = layer.forward(&a)?;
        }
        Ok(a)
    }

    /// Batched forward pass; column t of the result is `forward` of column
    /// t of the input.
    pub fn forward_batch(&self, x: &Matrix) -> Result<Matrix> {
        let mut a = self.layers[0].forward_batch(x)?;
        for layer in &self.layers[1..] {
            a = layer.forward_batch(&a)?;
        }
        Ok(a)
    }

    /// Total parameter count Σ n_l (n_{l−1} + 1).
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.output_dim() * (l.input_dim() + 1))
            .sum()
    }

    /// Flattens all parameters in the documented order.
    pub fn params(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            flat.extend_from_slice(layer.weights.as_slice());
            flat.extend_from_slice(layer.bias.as_slice());
        }
        flat
    }

    /// Overwrites all parameters from a flat vector in the documented
    /// order. The length must equal `param_count`.
    pub fn set_params(&mut self, flat: &[f64]) {
        assert_eq!(
            flat.len(),
            self.param_count(),
            "set_params: flat vector length mismatch"
        );
        let mut offset = 0;
        for layer in &mut self.layers {
            let w_len = layer.weights.as_slice().len();
            layer
                .weights
                .as_mut_slice()
                .copy_from_slice(&flat[offset..offset + w_len]);
            offset += w_len;
            let b_len = layer.bias.dim();
            layer
                .bias
                .as_mut_slice()
                .copy_from_slice(&flat[offset..offset + b_len]);
            offset += b_len;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_layer(dim: usize) -> DenseLayer {
        let w = Matrix::from_fn(dim, dim, |i, j| if i == j { 1.0 } else { 0.0 });
        DenseLayer::new(w, Vector::zeros(dim), Activation::Identity).unwrap()
    }

    #[test]
    fn layer_forward_identity_case() {
        let layer = identity_layer(2);
        let x = Vector::new(vec![3.0, -1.0]);
        assert_eq!(layer.forward(&x).unwrap(), x);
    }

    #[test]
    fn layer_forward_relu_hand_case() {
        let w = Matrix::from_vec(2, 2, vec![1.0, -1.0, 0.0, 2.0]).unwrap();
        let layer =
            DenseLayer::new(w, Vector::new(vec![-1.0, 0.0]), Activation::Relu).unwrap();
        let out = layer.forward(&Vector::new(vec![1.0, 1.0])).unwrap();
        assert_eq!(out, Vector::new(vec![0.0, 2.0]));
    }

    #[test]
    fn softmax_outputs_normalize() {
        let mut rng = RngStream::new(3, 0);
        let net = Network::random(
            &[3, 5],
            &[Activation::Softmax],
            WeightInit::ScaledUniform,
            &mut rng,
        )
        .unwrap();
        let out = net.forward(&Vector::new(vec![0.3, -2.0, 10.0])).unwrap();
        assert!(out.iter().all(|&p| p > 0.0));
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn forward_single_layer_matches_layer_forward() {
        let mut rng = RngStream::new(4, 0);
        let net = Network::random(
            &[3, 2],
            &[Activation::Tanh],
            WeightInit::ScaledUniform,
            &mut rng,
        )
        .unwrap();
        let x = Vector::new(vec![0.1, -0.4, 2.0]);
        assert_eq!(net.forward(&x).unwrap(), net.layers()[0].forward(&x).unwrap());
    }

    #[test]
    fn stacked_identity_layers_are_the_identity() {
        let net = Network::new(vec![identity_layer(3), identity_layer(3)]).unwrap();
        let x = Vector::new(vec![1.5, -2.0, 0.0]);
        assert_eq!(net.forward(&x).unwrap(), x);
    }

    #[test]
    fn param_count_formula() {
        let mut rng = RngStream::new(5, 0);
        let net = Network::random(
            &[2, 3, 3, 4],
            &[Activation::Relu, Activation::Relu, Activation::Identity],
            WeightInit::ScaledUniform,
            &mut rng,
        )
        .unwrap();
        // 3·(2+1) + 3·(3+1) + 4·(3+1) = 37
        assert_eq!(net.param_count(), 37);
        assert_eq!(net.params().len(), 37);
    }

    #[test]
    fn params_round_trip_through_set_params() {
        let mut rng = RngStream::new(6, 0);
        let mut net = Network::random(
            &[4, 8, 2],
            &[Activation::Tanh, Activation::Identity],
            WeightInit::ScaledUniform,
            &mut rng,
        )
        .unwrap();
        let theta = net.params();
        let mut shifted = theta.clone();
        for v in &mut shifted {
            *v += 1.0;
        }
        net.set_params(&shifted);
        assert_eq!(net.params(), shifted);
        net.set_params(&theta);
        assert_eq!(net.params(), theta);
    }

    #[test]
    fn softmax_rejected_on_hidden_layer() {
        let mut rng = RngStream::new(7, 0);
        let err = Network::random(
            &[2, 2, 2],
            &[Activation::Softmax, Activation::Identity],
            WeightInit::ScaledUniform,
            &mut rng,
        );
        assert!(err.is_err());
    }

    #[test]
    fn mismatched_layer_widths_rejected() {
        let a = DenseLayer::new(Matrix::zeros(3, 2), Vector::zeros(3), Activation::Relu).unwrap();
        let b = DenseLayer::new(Matrix::zeros(2, 4), Vector::zeros(2), Activation::Identity)
            .unwrap();
        assert!(Network::new(vec![a, b]).is_err());
    }

    #[test]
    fn forward_batch_matches_per_column_forward() {
        let mut rng = RngStream::new(8, 0);
        let net = Network::random(
            &[3, 7, 4],
            &[Activation::Relu, Activation::Softmax],
            WeightInit::ScaledUniform,
            &mut rng,
        )
        .unwrap();
        let x = Matrix::from_fn(3, 9, |_, _| rng.random_range(-2.0..2.0));
        let batch = net.forward_batch(&x).unwrap();
        for t in 0..9 {
            let single = net.forward(&x.col(t)).unwrap();
            for i in 0..4 {
                assert!((batch[(i, t)] - single[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn init_is_seed_deterministic_and_scale_bounded() {
        let make = || {
            let mut rng = RngStream::new(11, 0);
            Network::random(
                &[6, 4],
                &[Activation::Identity],
                WeightInit::ScaledUniform,
                &mut rng,
            )
            .unwrap()
        };
        let a = make();
        let b = make();
        assert_eq!(a.params(), b.params());
        let bound = (6.0 / 10.0_f64).sqrt();
        assert!(a.layers()[0]
            .weights()
            .as_slice()
            .iter()
            .all(|w| w.abs() < bound));
        assert!(a.layers()[0].bias().iter().all(|&b| b == 0.0));
    }
}
