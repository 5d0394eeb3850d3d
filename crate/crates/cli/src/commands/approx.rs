//! Algorithm approximation experiments: a network surrogate for
//! water-filling power allocation, and a trained unfolded
//! projected-gradient detector for 2x2 BPSK.

use std::path::Path;

use rand::Rng;
use siglearn::approx::{
    benchmark_speedup, evaluate_unfolded, gaussian_channel, train_surrogate, train_unfolded,
    waterfill, waterfilling_dataset, UnfoldedDetector, WaterfillingProblem,
};
use siglearn::nn::{Activation, Loss, TrainConfig};
use siglearn::numerics::{RngStream, Vector};

use crate::artifacts::{sig4, write_artifact};
use crate::commands::detect::loss_history_csv;
use crate::commands::{require_at_least, require_positive, train_config, CHANNEL_STREAM, EVAL_STREAM};
use crate::config::Config;
use crate::error::{runtime, validation, CliResult};

/// Trains a surrogate network on solved water-filling instances, then
/// times its batched forward pass against the bisection solver on fresh
/// inputs.
pub struct ApproxWaterfill {
    seed: u64,
    channels: usize,
    gain_range: (f64, f64),
    total_power: f64,
    tolerance: f64,
    train_samples: usize,
    hidden: Vec<usize>,
    train: TrainConfig,
    bench_inputs: usize,
    bench_tolerance: f64,
}

impl ApproxWaterfill {
    pub fn parse(cfg: &mut Config) -> CliResult<Self> {
        let seed = cfg.require_u64("seed")?;
        let gain_min = require_positive(cfg, "gain_min")?;
        let gain_max = require_positive(cfg, "gain_max")?;
        if gain_max <= gain_min {
            return Err(validation(format!(
                "field \"gain_max\": must exceed gain_min, got ({gain_min}, {gain_max})"
            )));
        }
        Ok(ApproxWaterfill {
            seed,
            channels: require_at_least(cfg, "channels", 1)?,
            gain_range: (gain_min, gain_max),
            total_power: require_positive(cfg, "total_power")?,
            tolerance: require_positive(cfg, "tolerance")?,
            train_samples: require_at_least(cfg, "train_samples", 2)?,
            hidden: cfg.require_usize_list("hidden")?,
            train: train_config(cfg, seed, Loss::Mse)?,
            bench_inputs: require_at_least(cfg, "bench_inputs", 1)?,
            bench_tolerance: require_positive(cfg, "bench_tolerance")?,
        })
    }

    pub fn run(&self, out: &Path) -> CliResult<String> {
        let mut data_rng = RngStream::new(self.seed, 2);
        let data = waterfilling_dataset(
            self.channels,
            self.gain_range,
            self.total_power,
            self.tolerance,
            self.train_samples,
            &mut data_rng,
        )
        .map_err(runtime)?;

        let mut widths = vec![self.channels];
        widths.extend_from_slice(&self.hidden);
        widths.push(self.channels);
        let mut activations = vec![Activation::Relu; self.hidden.len()];
        activations.push(Activation::Identity);

        let (net, holdout_nmse) =
            train_surrogate(&data, &widths, &activations, &self.train).map_err(runtime)?;
        net.save(&out.join("surrogate.txt")).map_err(runtime)?;

        let (lo, hi) = self.gain_range;
        let mut bench_rng = RngStream::new(self.seed, EVAL_STREAM);
        let inputs: Vec<Vector> = (0..self.bench_inputs)
            .map(|_| Vector::new((0..self.channels).map(|_| bench_rng.random_range(lo..hi)).collect()))
            .collect();
        let total_power = self.total_power;
        let bench_tolerance = self.bench_tolerance;
        let oracle = move |batch: &[Vector]| -> siglearn::Result<Vec<Vector>> {
            batch
                .iter()
                .map(|gains| {
                    waterfill(
                        &WaterfillingProblem::new(gains.clone(), total_power)?,
                        bench_tolerance,
                    )
                })
                .collect()
        };
        let report = benchmark_speedup(oracle, &net, &inputs).map_err(runtime)?;

        let surrogate_csv = format!(
            "channels,train_samples,holdout_nmse\n{},{},{holdout_nmse}\n",
            self.channels, self.train_samples
        );
        write_artifact(out, "surrogate.csv", &surrogate_csv)?;
        let speedup_csv = format!(
            "batch_size,max_deviation,mean_deviation,oracle_seconds,surrogate_seconds,speedup_factor\n{},{},{},{},{},{}\n",
            report.batch_size,
            report.max_deviation,
            report.mean_deviation,
            report.oracle_seconds,
            report.surrogate_seconds,
            report.speedup_factor()
        );
        write_artifact(out, "speedup.csv", &speedup_csv)?;

        Ok(format!(
            "surrogate holdout nmse {}; {}x speedup over {} inputs (max deviation {})",
            sig4(holdout_nmse),
            sig4(report.speedup_factor()),
            report.batch_size,
            sig4(report.max_deviation)
        ))
    }
}

/// Trains the per-layer step sizes of an unfolded projected-gradient
/// detector for one randomly drawn 2x2 channel, then compares its bit
/// error rate against the untrained schedule and exhaustive
/// maximum-likelihood detection on identical noise realizations.
pub struct ApproxUnfold {
    seed: u64,
    layers: usize,
    initial_step: f64,
    noise_variance: f64,
    train_samples: usize,
    trials: usize,
    train: TrainConfig,
}

impl ApproxUnfold {
    pub fn parse(cfg: &mut Config) -> CliResult<Self> {
        let seed = cfg.require_u64("seed")?;
        Ok(ApproxUnfold {
            seed,
            layers: require_at_least(cfg, "layers", 1)?,
            initial_step: require_positive(cfg, "initial_step")?,
            noise_variance: require_positive(cfg, "noise_variance")?,
            train_samples: require_at_least(cfg, "train_samples", 1)?,
            trials: require_at_least(cfg, "trials", 1)?,
            train: train_config(cfg, seed, Loss::Mse)?,
        })
    }

    pub fn run(&self, out: &Path) -> CliResult<String> {
        // The detector is built around a single channel draw; training
        // and evaluation both see that channel with fresh noise.
        let mut channel_rng = RngStream::new(self.seed, CHANNEL_STREAM);
        let channel = gaussian_channel(&mut channel_rng);
        let sampler = |_: &mut RngStream| channel.clone();
        let untrained = UnfoldedDetector::uniform(channel.clone(), self.layers, self.initial_step)
            .map_err(runtime)?;

        let (trained, history) = train_unfolded(
            &untrained,
            sampler,
            self.noise_variance,
            self.train_samples,
            &self.train,
        )
        .map_err(runtime)?;
        trained.save(&out.join("unfolded.txt")).map_err(runtime)?;
        write_artifact(out, "loss_history.csv", &loss_history_csv(&history))?;

        // Fresh stream per evaluation: both detectors and the
        // maximum-likelihood reference see identical noise.
        let mut eval_rng = RngStream::new(self.seed, EVAL_STREAM);
        let trained_eval = evaluate_unfolded(
            &trained,
            sampler,
            self.noise_variance,
            self.trials,
            &mut eval_rng,
        )
        .map_err(runtime)?;
        let mut eval_rng = RngStream::new(self.seed, EVAL_STREAM);
        let untrained_eval = evaluate_unfolded(
            &untrained,
            sampler,
            self.noise_variance,
            self.trials,
            &mut eval_rng,
        )
        .map_err(runtime)?;

        let csv = format!(
            "layers,noise_variance,trials,trained_ber,untrained_ber,ml_ber\n{},{},{},{},{},{}\n",
            self.layers,
            self.noise_variance,
            trained_eval.trials,
            trained_eval.detector_ber,
            untrained_eval.detector_ber,
            trained_eval.ml_ber
        );
        write_artifact(out, "unfold_report.csv", &csv)?;

        Ok(format!(
            "unfolded detector ({} layers): ber {} trained, {} untrained, {} exhaustive ml over {} trials",
            self.layers,
            sig4(trained_eval.detector_ber),
            sig4(untrained_eval.detector_ber),
            sig4(trained_eval.ml_ber),
            trained_eval.trials
        ))
    }
}
