//! Loss functions and exact backpropagation through the layer stack.

use super::{Activation, Network};
use crate::dataset::TrainingSet;
use crate::numerics::{Matrix, Vector};
use crate::{Error, Result};

/// Training objective. `Mse` averages squared error vector norms;
/// `CrossEntropy` averages negative log-probability of the true class and
/// requires a softmax output with one-hot targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Loss {
    Mse,
    CrossEntropy,
}

impl Loss {
    pub fn name(self) -> &'static str {
        match self {
            Loss::Mse => "mse",
            Loss::CrossEntropy => "cross-entropy",
        }
    }

    /// Full-set loss. See [`mse_loss`] and [`cross_entropy_loss`].
    pub fn evaluate(self, net: &Network, data: &TrainingSet) -> Result<f64> {
        check_dims(net, data.input_dim(), data.target_dim())?;
        if self == Loss::CrossEntropy {
            check_classification(net, data.targets())?;
        }
        let outputs = net.forward_batch(data.inputs())?;
        let t = data.len() as f64;
        match self {
            Loss::Mse => {
                let total: f64 = outputs
                    .as_slice()
                    .iter()
                    .zip(data.targets().as_slice())
                    .map(|(o, y)| (o - y) * (o - y))
                    .sum();
                Ok(total / t)
            }
            Loss::CrossEntropy => {
                let mut total = 0.0;
                for col in 0..data.len() {
                    let mut p_true = 0.0;
                    for i in 0..net.output_dim() {
                        p_true += data.targets()[(i, col)] * outputs[(i, col)];
                    }
                    total += -p_true.ln();
                }
                Ok(total / t)
            }
        }
    }
}

/// Mean squared error (1/T) Σ_t ‖y_t − f̂(x_t)‖².
pub fn mse_loss(net: &Network, data: &TrainingSet) -> Result<f64> {
    Loss::Mse.evaluate(net, data)
}

/// Mean negative log-probability of the true class under a softmax output.
pub fn cross_entropy_loss(net: &Network, data: &TrainingSet) -> Result<f64> {
    Loss::CrossEntropy.evaluate(net, data)
}

fn check_dims(net: &Network, input_dim: usize, target_dim: usize) -> Result<()> {
    if input_dim != net.input_dim() || target_dim != net.output_dim() {
        return Err(Error::Shape {
            op: "loss",
            left: (net.input_dim(), net.output_dim()),
            right: (input_dim, target_dim),
        });
    }
    Ok(())
}

/// Cross-entropy preconditions: softmax output, exactly one-hot targets.
fn check_classification(net: &Network, targets: &Matrix) -> Result<()> {
    let last = net.layers().last().expect("networks are nonempty");
    if last.activation() != Activation::Softmax {
        return Err(Error::invalid(
            "cross-entropy requires a softmax output layer",
        ));
    }
    for col in 0..targets.cols() {
        let mut ones = 0;
        for i in 0..targets.rows() {
            let v = targets[(i, col)];
            if v == 1.0 {
                ones += 1;
            } else if v != 0.0 {
                return Err(Error::invalid(format!(
                    "cross-entropy target column {col} is not one-hot (entry {v})"
                )));
            }
        }
        if ones != 1 {
            return Err(Error::invalid(format!(
                "cross-entropy target column {col} has {ones} ones, expected 1"
            )));
        }
    }
    Ok(())
}

impl Network {
    /// Gradient of the single-example loss with respect to all parameters,
    /// flattened in the documented order (length `param_count`).
    pub fn backward(&self, x: &Vector, target: &Vector, loss: Loss) -> Result<Vector> {
        let x = Matrix::from_columns(std::slice::from_ref(x))?;
        let y = Matrix::from_columns(std::slice::from_ref(target))?;
        Ok(Vector::new(self.grad_batch(&x, &y, loss)?))
    }

    /// Gradient of the batch-mean loss; columns of `x`/`y` are examples.
    pub(crate) fn grad_batch(&self, x: &Matrix, y: &Matrix, loss: Loss) -> Result<Vec<f64>> {
        check_dims(self, x.rows(), y.rows())?;
        if x.cols() != y.cols() {
            return Err(Error::Shape {
                op: "grad batch",
                left: x.shape(),
                right: y.shape(),
            });
        }
        if loss == Loss::CrossEntropy {
            check_classification(self, y)?;
        }

        // Forward trace: acts[0] = input, acts[l+1] = output of layer l.
        let mut acts: Vec<Matrix> = Vec::with_capacity(self.layers().len() + 1);
        acts.push(x.clone());
        for layer in self.layers() {
            let next = layer.forward_batch(acts.last().expect("nonempty"))?;
            acts.push(next);
        }

        let batch = x.cols() as f64;
        let out = acts.last().expect("nonempty");
        // With softmax + cross-entropy the output-layer activation backprop
        // collapses to (out − y); delta then already holds dL/dz.
        let softmax_ce = loss == Loss::CrossEntropy;
        let mut delta = match loss {
            Loss::Mse => Matrix::from_fn(out.rows(), out.cols(), |i, j| {
                2.0 * (out[(i, j)] - y[(i, j)]) / batch
            }),
            Loss::CrossEntropy => Matrix::from_fn(out.rows(), out.cols(), |i, j| {
                (out[(i, j)] - y[(i, j)]) / batch
            }),
        };

        let mut grad = vec![0.0; self.param_count()];
        let mut offset = grad.len();
        for (l, layer) in self.layers().iter().enumerate().rev() {
            let last = l == self.layers().len() - 1;
            if !(last && softmax_ce) {
                backprop_activation(layer.activation(), &acts[l + 1], &mut delta);
            }
            // dW = delta · a_prevᵀ, db = row sums of delta.
            let dw = delta.matmul_nt(&acts[l])?;
            let span = layer.output_dim() * (layer.input_dim() + 1);
            offset -= span;
            let w_len = dw.as_slice().len();
            grad[offset..offset + w_len].copy_from_slice(dw.as_slice());
            for i in 0..layer.output_dim() {
                let mut sum = 0.0;
                for j in 0..delta.cols() {
                    sum += delta[(i, j)];
                }
                grad[offset + w_len + i] = sum;
            }
            if l > 0 {
                delta = layer.weights().matmul_tn(&delta)?;
            }
        }
        debug_assert_eq!(offset, 0);
        Ok(grad)
    }
}

/// Turns dL/da into dL/dz in place, given the layer output `a`.
///
/// Derivatives are expressed through the outputs: relu's mask is a > 0
/// (subgradient 0 at the kink), tanh uses 1 − a², sigmoid a(1 − a), and
/// softmax applies its full Jacobian column by column.
fn backprop_activation(kind: Activation, a: &Matrix, delta: &mut Matrix) {
    match kind {
        Activation::Identity => {}
        Activation::Relu => {
            for (d, &v) in delta.as_mut_slice().iter_mut().zip(a.as_slice()) {
                if v <= 0.0 {
                    *d = 0.0;
                }
            }
        }
        Activation::Tanh => {
            for (d, &v) in delta.as_mut_slice().iter_mut().zip(a.as_slice()) {
                *d *= 1.0 - v * v;
            }
        }
        Activation::Sigmoid => {
            for (d, &v) in delta.as_mut_slice().iter_mut().zip(a.as_slice()) {
                *d *= v * (1.0 - v);
            }
        }
        Activation::Softmax => {
            for j in 0..a.cols() {
                let mut inner = 0.0;
                for i in 0..a.rows() {
                    inner += a[(i, j)] * delta[(i, j)];
                }
                for i in 0..a.rows() {
                    delta[(i, j)] = a[(i, j)] * (delta[(i, j)] - inner);
                }
            }
        }
    }
}
