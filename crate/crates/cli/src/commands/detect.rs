//! QPSK detection experiments: training a network detector, estimating
//! symbol error rates against the minimum-distance detector, and
//! rasterizing decision regions.

use std::path::{Path, PathBuf};

use siglearn::comms::{
    region_agreement, Constellation, GridSpec, MinDistanceDetector, MonteCarlo, NetworkDetector,
    RegionGrid, SerEstimate, train_detector,
};
use siglearn::nn::{Loss, Network, TrainConfig};

use crate::artifacts::{sig4, write_artifact};
use crate::commands::{
    require_at_least, require_positive, train_config, FeatureKind, MONTE_CARLO_STREAM_BASE,
};
use crate::config::Config;
use crate::error::{invalid, runtime, validation, CliResult};

/// Trains a softmax detector on noisy constellation samples and saves the
/// network plus its per-epoch loss history.
pub struct DetectTrain {
    noise_variance: f64,
    per_point: usize,
    hidden: Vec<usize>,
    feature_kind: FeatureKind,
    train: TrainConfig,
}

impl DetectTrain {
    pub fn parse(cfg: &mut Config) -> CliResult<Self> {
        let seed = cfg.require_u64("seed")?;
        Ok(DetectTrain {
            noise_variance: require_positive(cfg, "noise_variance")?,
            per_point: require_at_least(cfg, "per_point", 1)?,
            hidden: cfg.require_usize_list("hidden")?,
            feature_kind: FeatureKind::parse(cfg)?,
            train: train_config(cfg, seed, Loss::CrossEntropy)?,
        })
    }

    pub fn run(&self, out: &Path) -> CliResult<String> {
        let constellation = Constellation::qpsk();
        let feature_map = self.feature_kind.build(&constellation);
        let (detector, history) = train_detector(
            &constellation,
            self.noise_variance,
            self.per_point,
            &self.hidden,
            feature_map,
            &self.train,
        )
        .map_err(runtime)?;

        detector
            .network()
            .save(&out.join("network.txt"))
            .map_err(runtime)?;
        write_artifact(out, "loss_history.csv", &loss_history_csv(&history))?;

        let samples = self.per_point * constellation.len();
        let final_loss = history.last().copied().unwrap_or(f64::NAN);
        Ok(format!(
            "trained detector on {samples} samples over {} epochs: final loss {}",
            self.train.epochs,
            sig4(final_loss)
        ))
    }
}

pub fn loss_history_csv(history: &[f64]) -> String {
    let mut csv = String::from("epoch,loss\n");
    for (i, loss) in history.iter().enumerate() {
        csv.push_str(&format!("{},{loss}\n", i + 1));
    }
    csv
}

/// Loads a trained detector, checking it fits the QPSK constellation and
/// the declared feature map.
fn load_detector(
    cfg: &mut Config,
    constellation: &Constellation,
) -> CliResult<(NetworkDetector, FeatureKind)> {
    let path = PathBuf::from(cfg.require("network")?);
    let feature_kind = FeatureKind::parse(cfg)?;
    let net = Network::load(&path)
        .map_err(|e| validation(format!("field \"network\": {e} ({})", path.display())))?;
    let detector = NetworkDetector::new(net, constellation.len(), feature_kind.build(constellation))
        .map_err(invalid)?;
    Ok((detector, feature_kind))
}

/// Monte Carlo symbol error rates for the trained detector and the
/// minimum-distance detector across a sweep of noise levels, with shared
/// noise draws so the two error rates are directly comparable.
pub struct DetectEval {
    seed: u64,
    detector: NetworkDetector,
    noise_variances: Vec<f64>,
    trials: usize,
    workers: usize,
}

impl DetectEval {
    pub fn parse(cfg: &mut Config) -> CliResult<Self> {
        let seed = cfg.require_u64("seed")?;
        let (detector, _) = load_detector(cfg, &Constellation::qpsk())?;
        let noise_variances = cfg.require_f64_list("noise_variances")?;
        for &nv in &noise_variances {
            if !nv.is_finite() || nv <= 0.0 {
                return Err(validation(format!(
                    "field \"noise_variances\": expected positive numbers, got {nv}"
                )));
            }
        }
        Ok(DetectEval {
            seed,
            detector,
            noise_variances,
            trials: require_at_least(cfg, "trials", 1)?,
            workers: require_at_least(cfg, "workers", 1)?,
        })
    }

    pub fn run(&self, out: &Path) -> CliResult<String> {
        let constellation = Constellation::qpsk();
        let ml = MinDistanceDetector::new(constellation.clone());
        let mc = MonteCarlo {
            trials: self.trials,
            seed: self.seed,
            stream_base: MONTE_CARLO_STREAM_BASE,
            workers: self.workers,
        };

        let mut csv = String::from("sigma2,detector,trials,ser,std_err\n");
        let mut lines = Vec::new();
        for &nv in &self.noise_variances {
            let ml_est =
                siglearn::comms::ser_monte_carlo(&ml, &constellation, nv, &mc).map_err(runtime)?;
            let nn_est = siglearn::comms::ser_monte_carlo(&self.detector, &constellation, nv, &mc)
                .map_err(runtime)?;
            push_ser_row(&mut csv, nv, "ml", &ml_est);
            push_ser_row(&mut csv, nv, "nn", &nn_est);
            lines.push(format!(
                "noise variance {}: ml ser {}, nn ser {}",
                sig4(nv),
                sig4(ml_est.ser),
                sig4(nn_est.ser)
            ));
        }
        write_artifact(out, "ser.csv", &csv)?;
        Ok(lines.join("\n"))
    }
}

fn push_ser_row(csv: &mut String, nv: f64, which: &str, est: &SerEstimate) {
    csv.push_str(&format!(
        "{nv},{which},{},{},{}\n",
        est.trials, est.ser, est.std_err
    ));
}

/// Rasters of both detectors' decision regions over a square window,
/// plus how often they agree inside and outside a central square.
pub struct Regions {
    detector: NetworkDetector,
    extent: f64,
    resolution: usize,
    agreement_half_extent: f64,
}

impl Regions {
    pub fn parse(cfg: &mut Config) -> CliResult<Self> {
        let (detector, _) = load_detector(cfg, &Constellation::qpsk())?;
        Ok(Regions {
            detector,
            extent: require_positive(cfg, "extent")?,
            resolution: require_at_least(cfg, "resolution", 2)?,
            agreement_half_extent: require_positive(cfg, "agreement_half_extent")?,
        })
    }

    pub fn run(&self, out: &Path) -> CliResult<String> {
        let constellation = Constellation::qpsk();
        let ml = MinDistanceDetector::new(constellation.clone());
        let spec = GridSpec::square(self.extent, self.resolution);
        let nn_grid = RegionGrid::rasterize(&self.detector, spec).map_err(runtime)?;
        let ml_grid = RegionGrid::rasterize(&ml, spec).map_err(runtime)?;

        nn_grid
            .save_ppm(&out.join("regions_nn.ppm"), Some(&constellation))
            .map_err(runtime)?;
        ml_grid
            .save_ppm(&out.join("regions_ml.ppm"), Some(&constellation))
            .map_err(runtime)?;
        nn_grid
            .save_csv(&out.join("regions_nn.csv"))
            .map_err(runtime)?;
        ml_grid
            .save_csv(&out.join("regions_ml.csv"))
            .map_err(runtime)?;

        let agreement =
            region_agreement(&nn_grid, &ml_grid, self.agreement_half_extent).map_err(runtime)?;
        let csv = format!(
            "half_extent,inside_agreement,outside_agreement,inside_cells,outside_cells\n{},{},{},{},{}\n",
            self.agreement_half_extent,
            agreement.inside,
            agreement.outside,
            agreement.inside_cells,
            agreement.outside_cells
        );
        write_artifact(out, "agreement.csv", &csv)?;

        Ok(format!(
            "rasterized {0}x{0} regions: agreement {1} inside the central square, {2} outside",
            self.resolution,
            sig4(agreement.inside),
            sig4(agreement.outside)
        ))
    }
}
