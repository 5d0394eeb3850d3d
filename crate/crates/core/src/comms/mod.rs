//! QPSK detection over an additive white Gaussian noise channel.
//!
//! The signal space is the real plane: a [`Constellation`] holds the
//! candidate transmit points, an [`AwgnChannel`] adds independent Gaussian
//! noise, and a [`Detector`] maps received vectors back to class indices.
//! [`MinDistanceDetector`] implements the optimal nearest-point rule;
//! [`NetworkDetector`] wraps a trained classifier. Symbol-error-rate
//! estimation and decision-region rasterization live in the submodules.

mod monte_carlo;
mod regions;

pub use monte_carlo::{ser_monte_carlo, MonteCarlo, SerEstimate};
pub use regions::{region_agreement, AgreementReport, GridSpec, RegionGrid};

use crate::dataset::TrainingSet;
use crate::nn::{train, Activation, Network, TrainConfig};
use crate::numerics::{gaussian_vector, RngStream, Vector};
use crate::{Error, Result};

/// Signal points with their bit labels. All points live in the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Vector>,
    labels: Vec<String>,
}

impl Constellation {
    pub fn new(points: Vec<Vector>, labels: Vec<String>) -> Result<Self> {
        if points.is_empty() || points.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} points need {} labels",
                points.len(),
                points.len()
            )));
        }
        if let Some(p) = points.iter().find(|p| p.dim() != 2) {
            return Err(Error::Shape {
                op: "constellation",
                left: (2, 1),
                right: (p.dim(), 1),
            });
        }
        for (i, a) in points.iter().enumerate() {
            if a.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid("non-finite constellation point"));
            }
            for b in &points[..i] {
                if a == b {
                    return Err(Error::invalid("constellation points must be distinct"));
                }
            }
        }
        Ok(Self { points, labels })
    }

    /// The four unit-energy QPSK points (±1/√2, ±1/√2). Quadrants carry
    /// the bit labels: upper-right "11", lower-right "10", upper-left
    /// "01", lower-left "00".
    pub fn qpsk() -> Self {
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let points = vec![
            Vector::new(vec![c, c]),
            Vector::new(vec![c, -c]),
            Vector::new(vec![-c, c]),
            Vector::new(vec![-c, -c]),
        ];
        let labels = ["11", "10", "01", "00"].map(str::to_owned).to_vec();
        Self::new(points, labels).expect("QPSK constants are valid")
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction enforces at least one point
    }

    pub fn points(&self) -> &[Vector] {
        &self.points
    }

    pub fn point(&self, class: usize) -> &Vector {
        &self.points[class]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, class: usize) -> &str {
        &self.labels[class]
    }

    /// Index of the point closest to `r` in Euclidean distance; ties go to
    /// the lowest index.
    pub fn nearest(&self, r: &Vector) -> usize {
        let mut best = 0;
        let mut best_d = self.points[0].dist_sq(r);
        for (i, p) in self.points.iter().enumerate().skip(1) {
            let d = p.dist_sq(r);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }
}

/// Memoryless channel adding N(0, σ²I) noise. σ² = 0 is the noiseless
/// degenerate case, useful in tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnChannel {
    noise_variance: f64,
}

impl AwgnChannel {
    pub fn new(noise_variance: f64) -> Result<Self> {
        if !noise_variance.is_finite() || noise_variance < 0.0 {
            return Err(Error::invalid(format!(
                "noise variance must be finite and non-negative, got {noise_variance}"
            )));
        }
        Ok(Self { noise_variance })
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// r = s + n for a planar signal point.
    pub fn transmit(&self, s: &Vector, rng: &mut RngStream) -> Result<Vector> {
        if s.dim() != 2 {
            return Err(Error::Shape {
                op: "transmit",
                left: (2, 1),
                right: (s.dim(), 1),
            });
        }
        let noise = gaussian_vector(2, self.noise_variance, rng)?;
        Ok(s.add(&noise))
    }
}

/// Maps received vectors to class indices. Implementations are read-only,
/// so a shared detector can serve many threads.
pub trait Detector: Sync {
    fn classify(&self, r: &Vector) -> usize;
    fn num_classes(&self) -> usize;
}

/// The optimal rule for equiprobable points on an AWGN channel: pick the
/// nearest constellation point.
#[derive(Debug, Clone)]
pub struct MinDistanceDetector {
    constellation: Constellation,
}

impl MinDistanceDetector {
    pub fn new(constellation: Constellation) -> Self {
        Self { constellation }
    }
}

impl Detector for MinDistanceDetector {
    fn classify(&self, r: &Vector) -> usize {
        self.constellation.nearest(r)
    }

    fn num_classes(&self) -> usize {
        self.constellation.len()
    }
}

/// Input presentation for a learned detector: the raw received vector, or
/// the vector of Euclidean distances to each constellation point.
#[derive(Debug, Clone)]
pub enum FeatureMap {
    Raw,
    Distances(Constellation),
}

impl FeatureMap {
    /// Output dimension for planar received vectors.
    pub fn dim(&self) -> usize {
        match self {
            FeatureMap::Raw => 2,
            FeatureMap::Distances(c) => c.len(),
        }
    }

    pub fn apply(&self, r: &Vector) -> Vector {
        match self {
            FeatureMap::Raw => r.clone(),
            FeatureMap::Distances(c) => {
                Vector::new(c.points().iter().map(|p| p.dist_sq(r).sqrt()).collect())
            }
        }
    }
}

/// A trained classifier behind the [`Detector`] interface. Construction
/// checks the network against the feature map and class count, so
/// classification itself cannot fail.
pub struct NetworkDetector {
    net: Network,
    feature_map: FeatureMap,
}

impl NetworkDetector {
    pub fn new(net: Network, num_classes: usize, feature_map: FeatureMap) -> Result<Self> {
        if net.output_dim() != num_classes {
            return Err(Error::Shape {
                op: "detector output",
                left: (net.output_dim(), 1),
                right: (num_classes, 1),
            });
        }
        if net.input_dim() != feature_map.dim() {
            return Err(Error::Shape {
                op: "detector input",
                left: (net.input_dim(), 1),
                right: (feature_map.dim(), 1),
            });
        }
        Ok(Self { net, feature_map })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn feature_map(&self) -> &FeatureMap {
        &self.feature_map
    }
}

impl Detector for NetworkDetector {
    fn classify(&self, r: &Vector) -> usize {
        let features = self.feature_map.apply(r);
        let out = self
            .net
            .forward(&features)
            .expect("dimensions checked at construction");
        argmax(out.as_slice())
    }

    fn num_classes(&self) -> usize {
        self.net.output_dim()
    }
}

/// Index of the largest entry; ties go to the lowest index.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Labelled received vectors: `per_point` noisy transmissions of every
/// constellation point, with one-hot targets marking the transmitted
/// class. Examples are ordered point by point.
pub fn generate_detection_dataset(
    constellation: &Constellation,
    noise_variance: f64,
    per_point: usize,
    rng: &mut RngStream,
) -> Result<TrainingSet> {
    if per_point == 0 {
        return Err(Error::invalid("per-point sample count must be at least 1"));
    }
    let channel = AwgnChannel::new(noise_variance)?;
    let k = constellation.len();
    let mut inputs = Vec::with_capacity(k * per_point);
    let mut targets = Vec::with_capacity(k * per_point);
    for (class, point) in constellation.points().iter().enumerate() {
        for _ in 0..per_point {
            inputs.push(channel.transmit(point, rng)?);
            let mut one_hot = vec![0.0; k];
            one_hot[class] = 1.0;
            targets.push(Vector::new(one_hot));
        }
    }
    TrainingSet::from_examples(&inputs, &targets)
}

/// Re-expresses dataset inputs through a feature map, leaving targets
/// untouched.
pub fn map_features(map: &FeatureMap, set: &TrainingSet) -> Result<TrainingSet> {
    let inputs: Vec<Vector> = (0..set.len()).map(|t| map.apply(&set.input(t))).collect();
    let targets: Vec<Vector> = (0..set.len()).map(|t| set.target(t)).collect();
    TrainingSet::from_examples(&inputs, &targets)
}

/// End-to-end detector training: generates the noisy dataset (stream 2 of
/// `cfg.seed`), presents it through `feature_map`, and fits a softmax
/// classifier with relu hidden layers of the given widths.
pub fn train_detector(
    constellation: &Constellation,
    noise_variance: f64,
    per_point: usize,
    hidden: &[usize],
    feature_map: FeatureMap,
    cfg: &TrainConfig,
) -> Result<(NetworkDetector, Vec<f64>)> {
    let mut data_rng = RngStream::new(cfg.seed, 2);
    let raw = generate_detection_dataset(constellation, noise_variance, per_point, &mut data_rng)?;
    let data = map_features(&feature_map, &raw)?;

    let mut widths = vec![feature_map.dim()];
    widths.extend_from_slice(hidden);
    widths.push(constellation.len());
    let mut activations = vec![Activation::Relu; hidden.len()];
    activations.push(Activation::Softmax);

    let mut init_rng = RngStream::new(cfg.seed, 0);
    let net = Network::random(&widths, &activations, cfg.init, &mut init_rng)?;
    let (net, history) = train(net, &data, cfg)?;
    Ok((
        NetworkDetector::new(net, constellation.len(), feature_map)?,
        history,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{DenseLayer, WeightInit};
    use crate::numerics::Matrix;
    use rand::Rng;

    const FRAC: f64 = std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn qpsk_points_and_labels() {
        let c = Constellation::qpsk();
        let expected = [
            ([FRAC, FRAC], "11"),
            ([FRAC, -FRAC], "10"),
            ([-FRAC, FRAC], "01"),
            ([-FRAC, -FRAC], "00"),
        ];
        assert_eq!(c.len(), 4);
        for (i, (point, label)) in expected.iter().enumerate() {
            assert_eq!(c.point(i).as_slice(), point);
            assert_eq!(c.label(i), *label);
        }
    }

    #[test]
    fn qpsk_points_are_unit_norm() {
        for p in Constellation::qpsk().points() {
            assert!((p.norm_sq().sqrt() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constellation_rejects_duplicates_and_bad_dims() {
        let p = Vector::new(vec![1.0, 0.0]);
        assert!(Constellation::new(
            vec![p.clone(), p.clone()],
            vec!["a".into(), "b".into()]
        )
        .is_err());
        assert!(Constellation::new(vec![Vector::new(vec![1.0])], vec!["a".into()]).is_err());
        assert!(Constellation::new(vec![p], vec![]).is_err());
    }

    #[test]
    fn noiseless_transmit_is_identity() {
        let ch = AwgnChannel::new(0.0).unwrap();
        let s = Vector::new(vec![0.3, -0.9]);
        let mut rng = RngStream::new(1, 0);
        assert_eq!(ch.transmit(&s, &mut rng).unwrap(), s);
    }

    #[test]
    fn transmit_rejects_non_planar_signals() {
        let ch = AwgnChannel::new(0.1).unwrap();
        let mut rng = RngStream::new(1, 0);
        assert!(ch.transmit(&Vector::new(vec![1.0, 2.0, 3.0]), &mut rng).is_err());
    }

    #[test]
    fn transmit_is_unbiased() {
        let ch = AwgnChannel::new(0.2).unwrap();
        let s = Vector::new(vec![0.5, -1.5]);
        let mut rng = RngStream::new(2, 0);
        let n = 1_000_000;
        let mut sums = [0.0; 2];
        for _ in 0..n {
            let r = ch.transmit(&s, &mut rng).unwrap();
            sums[0] += r[0];
            sums[1] += r[1];
        }
        // Component std err = sqrt(0.2/1e6) ≈ 4.5e-4; allow 3 of them.
        for (sum, &truth) in sums.iter().zip(s.as_slice()) {
            assert!((sum / n as f64 - truth).abs() < 3.0 * (0.2f64 / n as f64).sqrt());
        }
    }

    #[test]
    fn transmit_is_stream_deterministic() {
        let ch = AwgnChannel::new(0.7).unwrap();
        let s = Vector::new(vec![1.0, 1.0]);
        let a = ch.transmit(&s, &mut RngStream::new(9, 5)).unwrap();
        let b = ch.transmit(&s, &mut RngStream::new(9, 5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn negative_variance_rejected() {
        assert!(AwgnChannel::new(-0.1).is_err());
        assert!(AwgnChannel::new(f64::NAN).is_err());
    }

    #[test]
    fn nearest_point_hand_cases() {
        let c = Constellation::qpsk();
        // (0.9, 0.8) sits in the first quadrant.
        assert_eq!(c.nearest(&Vector::new(vec![0.9, 0.8])), 0);
        assert_eq!(c.label(c.nearest(&Vector::new(vec![0.9, 0.8]))), "11");
        // Each constellation point maps to itself.
        for (i, p) in c.points().iter().enumerate() {
            assert_eq!(c.nearest(p), i);
        }
        // (0, 0.5) is equidistant from the two upper points (indices 0 and
        // 2); the tie goes to the lowest index.
        assert_eq!(c.nearest(&Vector::new(vec![0.0, 0.5])), 0);
    }

    #[test]
    fn nearest_always_attains_minimum_distance() {
        let c = Constellation::qpsk();
        let mut rng = RngStream::new(3, 0);
        for _ in 0..1000 {
            let r = Vector::new(vec![
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            ]);
            let chosen = c.nearest(&r);
            let d = c.point(chosen).dist_sq(&r);
            for p in c.points() {
                assert!(d <= p.dist_sq(&r));
            }
        }
    }

    #[test]
    fn constant_detector_reports_its_class_count() {
        // A network whose output bias fixes class 2 regardless of input.
        let w1 = Matrix::zeros(3, 2);
        let hidden = DenseLayer::new(w1, Vector::zeros(3), Activation::Relu).unwrap();
        let w2 = Matrix::zeros(4, 3);
        let bias = Vector::new(vec![0.0, 0.0, 5.0, 0.0]);
        let out = DenseLayer::new(w2, bias, Activation::Softmax).unwrap();
        let net = Network::new(vec![hidden, out]).unwrap();
        let det = NetworkDetector::new(net, 4, FeatureMap::Raw).unwrap();
        let mut rng = RngStream::new(4, 0);
        for _ in 0..32 {
            let r = Vector::new(vec![
                rng.random_range(-5.0..5.0),
                rng.random_range(-5.0..5.0),
            ]);
            assert_eq!(det.classify(&r), 2);
        }
        assert_eq!(det.num_classes(), 4);
    }

    #[test]
    fn argmax_unchanged_by_constant_logit_shift() {
        let mut rng = RngStream::new(5, 0);
        let net = Network::random(
            &[2, 4],
            &[Activation::Softmax],
            WeightInit::ScaledUniform,
            &mut rng,
        )
        .unwrap();
        let shifted = {
            let layer = &net.layers()[0];
            let bias = Vector::new(layer.bias().iter().map(|b| b + 7.5).collect());
            Network::new(vec![DenseLayer::new(
                layer.weights().clone(),
                bias,
                Activation::Softmax,
            )
            .unwrap()])
            .unwrap()
        };
        let base = NetworkDetector::new(net, 4, FeatureMap::Raw).unwrap();
        let moved = NetworkDetector::new(shifted, 4, FeatureMap::Raw).unwrap();
        for _ in 0..64 {
            let r = Vector::new(vec![
                rng.random_range(-2.0..2.0),
                rng.random_range(-2.0..2.0),
            ]);
            assert_eq!(base.classify(&r), moved.classify(&r));
        }
    }

    #[test]
    fn detector_construction_checks_widths() {
        let mut rng = RngStream::new(6, 0);
        let net = Network::random(
            &[3, 4],
            &[Activation::Softmax],
            WeightInit::ScaledUniform,
            &mut rng,
        )
        .unwrap();
        // Raw features are 2-dimensional; a 3-input net cannot consume them.
        assert!(NetworkDetector::new(net, 4, FeatureMap::Raw).is_err());
        let net = Network::random(
            &[2, 3],
            &[Activation::Softmax],
            WeightInit::ScaledUniform,
            &mut rng,
        )
        .unwrap();
        assert!(NetworkDetector::new(net, 4, FeatureMap::Raw).is_err());
    }

    #[test]
    fn dataset_counts_and_one_hot_targets() {
        let c = Constellation::qpsk();
        let mut rng = RngStream::new(7, 0);
        let set = generate_detection_dataset(&c, 0.2, 250, &mut rng).unwrap();
        assert_eq!(set.len(), 1000);
        assert_eq!(set.input_dim(), 2);
        assert_eq!(set.target_dim(), 4);
        for t in 0..set.len() {
            let target = set.target(t);
            let ones = target.iter().filter(|&&v| v == 1.0).count();
            let zeros = target.iter().filter(|&&v| v == 0.0).count();
            assert_eq!((ones, zeros), (1, 3));
            // Examples are emitted point by point, 250 per class.
            let class = target.iter().position(|&v| v == 1.0).unwrap();
            assert_eq!(class, t / 250);
        }
    }

    #[test]
    fn noiseless_dataset_repeats_the_points() {
        let c = Constellation::qpsk();
        let mut rng = RngStream::new(8, 0);
        let set = generate_detection_dataset(&c, 0.0, 3, &mut rng).unwrap();
        for t in 0..set.len() {
            assert_eq!(set.input(t), *c.point(t / 3));
        }
    }

    #[test]
    fn distance_features_have_constellation_dimension() {
        let c = Constellation::qpsk();
        let map = FeatureMap::Distances(c.clone());
        assert_eq!(map.dim(), 4);
        let f = map.apply(c.point(1));
        assert_eq!(f[1], 0.0);
        // Adjacent points sit √2 apart, diagonal ones 2 apart.
        assert!((f[0] - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!((f[3] - std::f64::consts::SQRT_2).abs() < 1e-12);
        assert!((f[2] - 2.0).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // Minimum-distance regions for QPSK are quadrants, so the rule
            // is invariant under positive scaling.
            #[test]
            fn nearest_is_scale_consistent(
                x in -4.0f64..4.0,
                y in -4.0f64..4.0,
                lambda in 0.01f64..100.0,
            ) {
                let c = Constellation::qpsk();
                let r = Vector::new(vec![x, y]);
                let scaled = r.scale(lambda);
                prop_assert_eq!(c.nearest(&r), c.nearest(&scaled));
            }
        }
    }
}
