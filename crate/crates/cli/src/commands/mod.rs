//! The seven experiments behind the subcommands.
//!
//! Each experiment is a struct with two phases: `parse` consumes and
//! validates every config field it understands (failures exit 1), `run`
//! does the work and writes artifacts (failures exit 2). Parsing touches
//! no files in the output directory, so a bad config never leaves partial
//! results behind.
//!
//! Seed streams the experiments draw from (the library reserves 0-5 for
//! initialization, shuffling, dataset generation, and holdout splits):
//! stream 6 feeds fresh evaluation inputs, stream 7 feeds Bussgang
//! decomposition samples, and Monte Carlo chunks start at stream 10.

pub mod approx;
pub mod detect;
pub mod invert;

use siglearn::comms::{Constellation, FeatureMap};
use siglearn::invert::Nonlinearity;
use siglearn::nn::{Loss, Optimizer, TrainConfig, WeightInit};

use crate::config::Config;
use crate::error::{invalid, validation, CliResult};

/// First seed stream Monte Carlo estimation chunks draw from.
pub const MONTE_CARLO_STREAM_BASE: u64 = 10;
/// Seed stream for fresh evaluation inputs (never seen in training).
pub const EVAL_STREAM: u64 = 6;
/// Seed stream for Bussgang decomposition sampling.
pub const DECOMPOSE_STREAM: u64 = 7;
/// Seed stream for drawing the channel a detector is built around.
pub const CHANNEL_STREAM: u64 = 8;

/// Reads the shared training fields: `optimizer`, `learning_rate`,
/// `batch_size`, `epochs`.
pub fn train_config(cfg: &mut Config, seed: u64, loss: Loss) -> CliResult<TrainConfig> {
    let optimizer = match cfg.require("optimizer")?.as_str() {
        "sgd" => Optimizer::Sgd,
        "adam" => Optimizer::Adam,
        other => {
            return Err(validation(format!(
                "field \"optimizer\": expected \"sgd\" or \"adam\", got \"{other}\""
            )))
        }
    };
    Ok(TrainConfig {
        optimizer,
        learning_rate: cfg.require_f64("learning_rate")?,
        batch_size: cfg.require_usize("batch_size")?,
        epochs: cfg.require_usize("epochs")?,
        seed,
        init: WeightInit::ScaledUniform,
        loss,
    })
}

/// How received samples are presented to the network detector.
#[derive(Debug, Clone, Copy)]
pub enum FeatureKind {
    Raw,
    Distances,
}

impl FeatureKind {
    pub fn parse(cfg: &mut Config) -> CliResult<Self> {
        match cfg.require("feature_map")?.as_str() {
            "raw" => Ok(FeatureKind::Raw),
            "distances" => Ok(FeatureKind::Distances),
            other => Err(validation(format!(
                "field \"feature_map\": expected \"raw\" or \"distances\", got \"{other}\""
            ))),
        }
    }

    pub fn build(self, constellation: &Constellation) -> FeatureMap {
        match self {
            FeatureKind::Raw => FeatureMap::Raw,
            FeatureKind::Distances => FeatureMap::Distances(constellation.clone()),
        }
    }
}

/// Reads `nonlinearity` plus its kind-specific parameter fields.
pub fn nonlinearity(cfg: &mut Config) -> CliResult<Nonlinearity> {
    let kind = cfg.require("nonlinearity")?;
    let g = match kind.as_str() {
        "identity" => Nonlinearity::Identity,
        "soft-limiter" => Nonlinearity::SoftLimiter {
            clip: cfg.require_f64("clip")?,
        },
        "tanh-saturation" => Nonlinearity::TanhSaturation {
            drive: cfg.require_f64("drive")?,
        },
        "rapp" => Nonlinearity::Rapp {
            smoothness: cfg.require_f64("smoothness")?,
            saturation: cfg.require_f64("saturation")?,
        },
        "uniform-quantizer" => Nonlinearity::UniformQuantizer {
            bits: cfg.require_u64("bits")? as u32,
            range: cfg.require_f64("range")?,
        },
        other => {
            return Err(validation(format!(
                "field \"nonlinearity\": unknown kind \"{other}\" (expected identity, \
                 soft-limiter, tanh-saturation, rapp, or uniform-quantizer)"
            )))
        }
    };
    g.validate().map_err(invalid)?;
    Ok(g)
}

/// `name=value` pairs joined with `;`, comma-free so the result fits in
/// one CSV cell.
pub fn params_cell(g: &Nonlinearity) -> String {
    g.params()
        .iter()
        .map(|(name, value)| format!("{name}={value}"))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn require_positive(cfg: &mut Config, key: &str) -> CliResult<f64> {
    let v = cfg.require_f64(key)?;
    if !v.is_finite() || v <= 0.0 {
        return Err(validation(format!(
            "field \"{key}\": expected a positive number, got {v}"
        )));
    }
    Ok(v)
}

pub fn require_at_least(cfg: &mut Config, key: &str, min: usize) -> CliResult<usize> {
    let v = cfg.require_usize(key)?;
    if v < min {
        return Err(validation(format!(
            "field \"{key}\": expected at least {min}, got {v}"
        )));
    }
    Ok(v)
}
