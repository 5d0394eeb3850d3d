//! Learned inversion of a memoryless nonlinearity against a Bussgang
//! linear baseline.
//!
//! A distortion g is applied element-wise to a signal y; the task is to
//! recover y from g(y). [`bussgang_decompose`] fits the linear model
//! g(y) = D·y + n with n empirically uncorrelated with y, giving the
//! baseline equalizer g(y)/D. [`train_inverse`] fits a network to
//! (g(y), y) pairs instead, and [`evaluate_inverse`] compares the two on
//! fresh samples. Training data inside [`train_inverse`] draws from
//! stream 5 of `cfg.seed` (0 = init, 1 = shuffle, 3 = holdout split).

use rand::Rng;

use crate::approx::train_surrogate;
use crate::dataset::TrainingSet;
use crate::nn::{train, Activation, Network, TrainConfig};
use crate::numerics::{gaussian_vector, Matrix, RngStream, Vector};
use crate::{Error, Result};

/// Training data inside [`train_inverse`] draws from this stream of
/// `cfg.seed`.
const INVERSION_DATA_STREAM: u64 = 5;

/// Element-wise memoryless distortion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Nonlinearity {
    Identity,
    /// Hard clip to [−clip, clip].
    SoftLimiter { clip: f64 },
    /// tanh(drive·y): saturates harder as drive grows.
    TanhSaturation { drive: f64 },
    /// Smooth limiter y / (1 + (|y|/saturation)^(2p))^(1/(2p)); approaches
    /// the hard clip as the smoothness p grows.
    Rapp { smoothness: f64, saturation: f64 },
    /// Mid-rise quantizer over [−range, range] with 2^bits levels; out of
    /// range inputs take the nearest edge level. bits = 1, range = 2 is
    /// the sign function.
    UniformQuantizer { bits: u32, range: f64 },
}

impl Nonlinearity {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| -> Result<()> {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
            Ok(())
        };
        match *self {
            Nonlinearity::Identity => Ok(()),
            Nonlinearity::SoftLimiter { clip } => positive("limiter clip", clip),
            Nonlinearity::TanhSaturation { drive } => positive("tanh drive", drive),
            Nonlinearity::Rapp {
                smoothness,
                saturation,
            } => {
                if !smoothness.is_finite() || smoothness < 1.0 {
                    return Err(Error::invalid(format!(
                        "Rapp smoothness must be at least 1, got {smoothness}"
                    )));
                }
                positive("Rapp saturation", saturation)
            }
            Nonlinearity::UniformQuantizer { bits, range } => {
                // 2^bits must stay exactly representable for the level grid.
                if !(1..=52).contains(&bits) {
                    return Err(Error::invalid(format!(
                        "quantizer bits must lie in 1..=52, got {bits}"
                    )));
                }
                positive("quantizer range", range)
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Nonlinearity::Identity => "identity",
            Nonlinearity::SoftLimiter { .. } => "soft-limiter",
            Nonlinearity::TanhSaturation { .. } => "tanh-saturation",
            Nonlinearity::Rapp { .. } => "rapp",
            Nonlinearity::UniformQuantizer { .. } => "uniform-quantizer",
        }
    }

    /// Parameter names and values, in declaration order.
    pub fn params(&self) -> Vec<(&'static str, f64)> {
        match *self {
            Nonlinearity::Identity => vec![],
            Nonlinearity::SoftLimiter { clip } => vec![("clip", clip)],
            Nonlinearity::TanhSaturation { drive } => vec![("drive", drive)],
            Nonlinearity::Rapp {
                smoothness,
                saturation,
            } => vec![("smoothness", smoothness), ("saturation", saturation)],
            Nonlinearity::UniformQuantizer { bits, range } => {
                vec![("bits", bits as f64), ("range", range)]
            }
        }
    }

    fn apply_scalar(&self, y: f64) -> f64 {
        match *self {
            Nonlinearity::Identity => y,
            Nonlinearity::SoftLimiter { clip } => y.clamp(-clip, clip),
            Nonlinearity::TanhSaturation { drive } => (drive * y).tanh(),
            Nonlinearity::Rapp {
                smoothness,
                saturation,
            } => {
                let ratio = (y.abs() / saturation).powf(2.0 * smoothness);
                y / (1.0 + ratio).powf(1.0 / (2.0 * smoothness))
            }
            Nonlinearity::UniformQuantizer { bits, range } => {
                let levels = (1u64 << bits) as f64;
                let step = 2.0 * range / levels;
                let idx = ((y + range) / step).floor().clamp(0.0, levels - 1.0);
                -range + step * (idx + 0.5)
            }
        }
    }

    /// Element-wise application.
    pub fn apply(&self, y: &Vector) -> Result<Vector> {
        self.validate()?;
        Ok(Vector::new(y.iter().map(|v| self.apply_scalar(*v)).collect()))
    }
}

/// Fitted linear model g(y) = D·y + n for y ~ N(0, σ_y²): the gain D, the
/// second moment of the residual n, the empirical mean square of the
/// inputs, and the empirical residual-input correlation (≈0 by
/// construction of D).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BussgangDecomposition {
    pub gain: f64,
    pub residual_variance: f64,
    pub input_variance: f64,
    pub sample_count: usize,
    pub residual_correlation: f64,
}

/// Least-squares linear fit of an arbitrary scalar distortion over `n`
/// Gaussian draws: D = Ê[g(y)·y] / Ê[y²].
pub fn bussgang_decompose_with<F>(
    g: F,
    input_variance: f64,
    n: usize,
    rng: &mut RngStream,
) -> Result<BussgangDecomposition>
where
    F: Fn(f64) -> f64,
{
    if n < 2 {
        return Err(Error::invalid(format!(
            "decomposition needs at least 2 samples, got {n}"
        )));
    }
    if !input_variance.is_finite() || input_variance <= 0.0 {
        return Err(Error::invalid(format!(
            "input variance must be positive and finite, got {input_variance}"
        )));
    }
    let y = gaussian_vector(n, input_variance, rng)?;
    let x: Vec<f64> = y.iter().map(|v| g(*v)).collect();
    let mut sum_xy = 0.0;
    let mut sum_yy = 0.0;
    for (xv, yv) in x.iter().zip(y.iter()) {
        sum_xy += xv * yv;
        sum_yy += yv * yv;
    }
    if sum_yy == 0.0 {
        return Err(Error::NumericDegeneracy(
            "zero empirical input variance".into(),
        ));
    }
    let gain = sum_xy / sum_yy;

    let residuals: Vec<f64> = x.iter().zip(y.iter()).map(|(xv, yv)| xv - gain * yv).collect();
    let residual_variance = residuals.iter().map(|r| r * r).sum::<f64>() / n as f64;

    let mean_r = residuals.iter().sum::<f64>() / n as f64;
    let mean_y = y.iter().sum::<f64>() / n as f64;
    let mut cov = 0.0;
    let mut var_r = 0.0;
    let mut var_y = 0.0;
    for (r, yv) in residuals.iter().zip(y.iter()) {
        cov += (r - mean_r) * (yv - mean_y);
        var_r += (r - mean_r) * (r - mean_r);
        var_y += (yv - mean_y) * (yv - mean_y);
    }
    // A linear g leaves no residual; call that perfectly uncorrelated.
    let residual_correlation = if var_r * var_y == 0.0 {
        0.0
    } else {
        cov / (var_r * var_y).sqrt()
    };

    Ok(BussgangDecomposition {
        gain,
        residual_variance,
        input_variance: sum_yy / n as f64,
        sample_count: n,
        residual_correlation,
    })
}

pub fn bussgang_decompose(
    g: &Nonlinearity,
    input_variance: f64,
    n: usize,
    rng: &mut RngStream,
) -> Result<BussgangDecomposition> {
    g.validate()?;
    bussgang_decompose_with(|y| g.apply_scalar(y), input_variance, n, rng)
}

/// Draws y_t from the sampler and stores (g(y_t), y_t): inputs are the
/// distorted signals, targets the clean ones.
pub fn generate_inversion_dataset<S>(
    g: &Nonlinearity,
    mut sampler: S,
    t: usize,
    rng: &mut RngStream,
) -> Result<TrainingSet>
where
    S: FnMut(&mut RngStream) -> Vector,
{
    g.validate()?;
    if t == 0 {
        return Err(Error::invalid("dataset needs at least one sample"));
    }
    let mut inputs = Vec::with_capacity(t);
    let mut targets = Vec::with_capacity(t);
    for _ in 0..t {
        let y = sampler(rng);
        inputs.push(g.apply(&y)?);
        targets.push(y);
    }
    TrainingSet::from_examples(&inputs, &targets)
}

/// Zero-mean Gaussian signal sampler matching run-time statistics. A
/// positive `atypical_weight` mixes in that fraction of draws with the
/// standard deviation inflated by `atypical_scale`, emphasizing rare
/// inputs during training.
pub fn gaussian_signal_sampler(
    dim: usize,
    variance: f64,
    atypical_weight: f64,
    atypical_scale: f64,
) -> Result<impl FnMut(&mut RngStream) -> Vector> {
    if dim == 0 {
        return Err(Error::invalid("sampler dimension must be at least 1"));
    }
    if !variance.is_finite() || variance <= 0.0 {
        return Err(Error::invalid(format!(
            "signal variance must be positive and finite, got {variance}"
        )));
    }
    if !(0.0..1.0).contains(&atypical_weight) {
        return Err(Error::invalid(format!(
            "atypical weight must lie in [0, 1), got {atypical_weight}"
        )));
    }
    if !atypical_scale.is_finite() || atypical_scale <= 0.0 {
        return Err(Error::invalid(format!(
            "atypical scale must be positive and finite, got {atypical_scale}"
        )));
    }
    Ok(move |rng: &mut RngStream| {
        let variance = if atypical_weight > 0.0 && rng.random::<f64>() < atypical_weight {
            variance * atypical_scale * atypical_scale
        } else {
            variance
        };
        gaussian_vector(dim, variance, rng).expect("validated variance")
    })
}

/// Fits a network mapping g(y) back to y on `t` generated pairs (data
/// from stream 5 of `cfg.seed`, 80/20 split from stream 3, init from
/// stream 0) and reports the holdout NMSE.
pub fn train_inverse<S>(
    g: &Nonlinearity,
    sampler: S,
    t: usize,
    widths: &[usize],
    activations: &[Activation],
    cfg: &TrainConfig,
) -> Result<(Network, f64)>
where
    S: FnMut(&mut RngStream) -> Vector,
{
    let mut data_rng = RngStream::new(cfg.seed, INVERSION_DATA_STREAM);
    let data = generate_inversion_dataset(g, sampler, t, &mut data_rng)?;
    train_surrogate(&data, widths, activations, cfg)
}

/// Appends `extra` freshly generated reference pairs to the corpus and
/// continues training the given network on the extended set (no
/// re-initialization). Returns the updated network, the extended corpus,
/// and the epoch loss history of the continuation.
pub fn refresh_inverse<S>(
    net: Network,
    data: &TrainingSet,
    g: &Nonlinearity,
    mut sampler: S,
    extra: usize,
    cfg: &TrainConfig,
    rng: &mut RngStream,
) -> Result<(Network, TrainingSet, Vec<f64>)>
where
    S: FnMut(&mut RngStream) -> Vector,
{
    if extra == 0 {
        return Err(Error::invalid("refresh needs at least one new sample"));
    }
    let mut inputs: Vec<Vector> = (0..data.len()).map(|t| data.input(t)).collect();
    let mut targets: Vec<Vector> = (0..data.len()).map(|t| data.target(t)).collect();
    for _ in 0..extra {
        let y = sampler(rng);
        inputs.push(g.apply(&y)?);
        targets.push(y);
    }
    let extended = TrainingSet::from_examples(&inputs, &targets)?;
    let (net, history) = train(net, &extended, cfg)?;
    Ok((net, extended, history))
}

/// Nearest-rank quantiles of the learned inverse's per-sample Euclidean
/// errors, for inspecting tails beyond the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorQuantiles {
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
}

/// Fresh-sample comparison of the learned inverse against the Bussgang
/// equalizer g(y)/D.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionReport {
    pub learned_nmse: f64,
    pub bussgang_nmse: f64,
    /// 10·log10(bussgang/learned): positive when the network wins. Zero
    /// when both NMSEs are exactly zero.
    pub gain_db: f64,
    pub trials: usize,
    pub learned_errors: ErrorQuantiles,
}

fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

/// Comparison against an arbitrary scalar distortion; see
/// [`evaluate_inverse`].
pub fn evaluate_inverse_with<F, S>(
    learned: &Network,
    bd: &BussgangDecomposition,
    g: F,
    mut sampler: S,
    trials: usize,
    rng: &mut RngStream,
) -> Result<InversionReport>
where
    F: Fn(f64) -> f64,
    S: FnMut(&mut RngStream) -> Vector,
{
    if trials == 0 {
        return Err(Error::invalid("evaluation needs at least one trial"));
    }
    if bd.gain == 0.0 {
        return Err(Error::NumericDegeneracy(
            "Bussgang equalizer undefined for zero gain".into(),
        ));
    }
    let mut ys = Vec::with_capacity(trials);
    let mut xs = Vec::with_capacity(trials);
    for _ in 0..trials {
        let y = sampler(rng);
        xs.push(Vector::new(y.iter().map(|v| g(*v)).collect()));
        ys.push(y);
    }
    let outputs = learned.forward_batch(&Matrix::from_columns(&xs)?)?;
    if outputs.rows() != ys[0].dim() {
        return Err(Error::Shape {
            op: "inverse evaluation",
            left: (outputs.rows(), 1),
            right: (ys[0].dim(), 1),
        });
    }

    let mut learned_num = 0.0;
    let mut bussgang_num = 0.0;
    let mut den = 0.0;
    let mut errors = Vec::with_capacity(trials);
    for (t, y) in ys.iter().enumerate() {
        let mut learned_sq = 0.0;
        for i in 0..y.dim() {
            let diff = outputs[(i, t)] - y[i];
            learned_sq += diff * diff;
            let linear = xs[t][i] / bd.gain - y[i];
            bussgang_num += linear * linear;
        }
        learned_num += learned_sq;
        errors.push(learned_sq.sqrt());
        den += y.norm_sq();
    }
    if den == 0.0 {
        return Err(Error::NumericDegeneracy(
            "NMSE undefined for all-zero signals".into(),
        ));
    }
    let learned_nmse = learned_num / den;
    let bussgang_nmse = bussgang_num / den;
    let gain_db = if learned_nmse == 0.0 && bussgang_nmse == 0.0 {
        0.0
    } else {
        10.0 * (bussgang_nmse / learned_nmse).log10()
    };
    errors.sort_by(|a, b| a.total_cmp(b));
    Ok(InversionReport {
        learned_nmse,
        bussgang_nmse,
        gain_db,
        trials,
        learned_errors: ErrorQuantiles {
            p50: nearest_rank(&errors, 0.50),
            p90: nearest_rank(&errors, 0.90),
            p99: nearest_rank(&errors, 0.99),
            max: *errors.last().unwrap(),
        },
    })
}

/// On fresh samples, NMSE of the learned inverse f̂(g(y)) vs y, NMSE of
/// the Bussgang equalizer g(y)/D vs y, their ratio in dB, and the
/// distribution of the learned inverse's per-sample errors.
pub fn evaluate_inverse<S>(
    learned: &Network,
    bd: &BussgangDecomposition,
    g: &Nonlinearity,
    sampler: S,
    trials: usize,
    rng: &mut RngStream,
) -> Result<InversionReport>
where
    S: FnMut(&mut RngStream) -> Vector,
{
    g.validate()?;
    evaluate_inverse_with(learned, bd, |y| g.apply_scalar(y), sampler, trials, rng)
}
