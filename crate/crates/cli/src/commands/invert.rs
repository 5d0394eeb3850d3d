//! Nonlinearity inversion experiments: training a network inverse of a
//! memoryless distortion and comparing it against the Bussgang linear
//! equalizer, plus standalone Bussgang decomposition.

use std::path::Path;

use siglearn::invert::{
    bussgang_decompose, evaluate_inverse, gaussian_signal_sampler, train_inverse, Nonlinearity,
};
use siglearn::nn::{Activation, Loss, TrainConfig};
use siglearn::numerics::RngStream;

use crate::artifacts::{sig4, write_artifact};
use crate::commands::{
    nonlinearity, params_cell, require_at_least, require_positive, train_config, DECOMPOSE_STREAM,
    EVAL_STREAM,
};
use crate::config::Config;
use crate::error::{invalid, runtime, CliResult};

/// Reads the Gaussian signal model fields shared by the inversion
/// experiments: `signal_variance` plus the optional heavy-tail mixture
/// (`atypical_weight` of samples drawn at `atypical_scale` times the
/// standard deviation).
struct SignalModel {
    variance: f64,
    atypical_weight: f64,
    atypical_scale: f64,
}

impl SignalModel {
    fn parse(cfg: &mut Config) -> CliResult<Self> {
        let model = SignalModel {
            variance: require_positive(cfg, "signal_variance")?,
            atypical_weight: cfg.optional_f64("atypical_weight", 0.0)?,
            atypical_scale: cfg.optional_f64("atypical_scale", 1.0)?,
        };
        // Build one throwaway sampler so bad mixture parameters fail here.
        gaussian_signal_sampler(1, model.variance, model.atypical_weight, model.atypical_scale)
            .map(drop)
            .map_err(invalid)?;
        Ok(model)
    }

    fn sampler(&self) -> CliResult<impl FnMut(&mut RngStream) -> siglearn::numerics::Vector> {
        gaussian_signal_sampler(1, self.variance, self.atypical_weight, self.atypical_scale)
            .map_err(runtime)
    }
}

/// Trains a network to undo a memoryless nonlinearity, then scores it on
/// fresh samples against the Bussgang equalizer g(y)/D.
pub struct Invert {
    seed: u64,
    g: Nonlinearity,
    signal: SignalModel,
    train_samples: usize,
    hidden: Vec<usize>,
    train: TrainConfig,
    decompose_samples: usize,
    trials: usize,
}

impl Invert {
    pub fn parse(cfg: &mut Config) -> CliResult<Self> {
        let seed = cfg.require_u64("seed")?;
        Ok(Invert {
            seed,
            g: nonlinearity(cfg)?,
            signal: SignalModel::parse(cfg)?,
            train_samples: require_at_least(cfg, "train_samples", 2)?,
            hidden: cfg.require_usize_list("hidden")?,
            train: train_config(cfg, seed, Loss::Mse)?,
            decompose_samples: require_at_least(cfg, "decompose_samples", 2)?,
            trials: require_at_least(cfg, "trials", 1)?,
        })
    }

    pub fn run(&self, out: &Path) -> CliResult<String> {
        let mut widths = vec![1];
        widths.extend_from_slice(&self.hidden);
        widths.push(1);
        let mut activations = vec![Activation::Tanh; self.hidden.len()];
        activations.push(Activation::Identity);

        let (net, holdout_nmse) = train_inverse(
            &self.g,
            self.signal.sampler()?,
            self.train_samples,
            &widths,
            &activations,
            &self.train,
        )
        .map_err(runtime)?;
        net.save(&out.join("inverse.txt")).map_err(runtime)?;

        let mut decompose_rng = RngStream::new(self.seed, DECOMPOSE_STREAM);
        let bd = bussgang_decompose(
            &self.g,
            self.signal.variance,
            self.decompose_samples,
            &mut decompose_rng,
        )
        .map_err(runtime)?;

        let mut eval_rng = RngStream::new(self.seed, EVAL_STREAM);
        let report = evaluate_inverse(
            &net,
            &bd,
            &self.g,
            self.signal.sampler()?,
            self.trials,
            &mut eval_rng,
        )
        .map_err(runtime)?;

        let csv = format!(
            "kind,params,signal_variance,trials,holdout_nmse,learned_nmse,bussgang_nmse,gain_db,err_p50,err_p90,err_p99,err_max\n\
             {},{},{},{},{holdout_nmse},{},{},{},{},{},{},{}\n",
            self.g.kind(),
            params_cell(&self.g),
            self.signal.variance,
            report.trials,
            report.learned_nmse,
            report.bussgang_nmse,
            report.gain_db,
            report.learned_errors.p50,
            report.learned_errors.p90,
            report.learned_errors.p99,
            report.learned_errors.max
        );
        write_artifact(out, "inversion_report.csv", &csv)?;

        Ok(format!(
            "learned inverse of {}: nmse {} vs bussgang {} ({} dB gain) over {} trials",
            self.g.kind(),
            sig4(report.learned_nmse),
            sig4(report.bussgang_nmse),
            sig4(report.gain_db),
            report.trials
        ))
    }
}

/// Estimates the Bussgang decomposition of a nonlinearity under a
/// Gaussian input: the linear gain, the residual power, and how
/// uncorrelated the residual is with the input.
pub struct Bussgang {
    seed: u64,
    g: Nonlinearity,
    signal_variance: f64,
    samples: usize,
}

impl Bussgang {
    pub fn parse(cfg: &mut Config) -> CliResult<Self> {
        let seed = cfg.require_u64("seed")?;
        Ok(Bussgang {
            seed,
            g: nonlinearity(cfg)?,
            signal_variance: require_positive(cfg, "signal_variance")?,
            samples: require_at_least(cfg, "samples", 2)?,
        })
    }

    pub fn run(&self, out: &Path) -> CliResult<String> {
        let mut rng = RngStream::new(self.seed, DECOMPOSE_STREAM);
        let bd = bussgang_decompose(&self.g, self.signal_variance, self.samples, &mut rng)
            .map_err(runtime)?;

        let csv = format!(
            "kind,params,gain,residual_variance,input_variance,sample_count,residual_correlation\n\
             {},{},{},{},{},{},{}\n",
            self.g.kind(),
            params_cell(&self.g),
            bd.gain,
            bd.residual_variance,
            bd.input_variance,
            bd.sample_count,
            bd.residual_correlation
        );
        write_artifact(out, "bussgang.csv", &csv)?;

        Ok(format!(
            "bussgang decomposition of {}: gain {}, residual variance {}, residual correlation {}",
            self.g.kind(),
            sig4(bd.gain),
            sig4(bd.residual_variance),
            sig4(bd.residual_correlation)
        ))
    }
}
