//! Column-stacked training sets: inputs and targets side by side, one
//! example per column, with seeded holdout splits and CSV persistence.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::numerics::{Matrix, RngStream, Vector};
use crate::{Error, Result};

/// A supervised dataset. `inputs` is n×T, `targets` is k×T; column t of
/// each holds example t.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    inputs: Matrix,
    targets: Matrix,
}

impl TrainingSet {
    pub fn new(inputs: Matrix, targets: Matrix) -> Result<Self> {
        if inputs.cols() != targets.cols() {
            return Err(Error::Shape {
                op: "training set",
                left: inputs.shape(),
                right: targets.shape(),
            });
        }
        if inputs.cols() == 0 {
            return Err(Error::invalid("training set must contain at least one example"));
        }
        Ok(Self { inputs, targets })
    }

    /// Builds a set from parallel per-example vectors.
    pub fn from_examples(inputs: &[Vector], targets: &[Vector]) -> Result<Self> {
        Self::new(Matrix::from_columns(inputs)?, Matrix::from_columns(targets)?)
    }

    /// Number of examples T.
    pub fn len(&self) -> usize {
        self.inputs.cols()
    }

    pub fn is_empty(&self) -> bool {
        false // construction enforces T >= 1
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.rows()
    }

    pub fn target_dim(&self) -> usize {
        self.targets.rows()
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn targets(&self) -> &Matrix {
        &self.targets
    }

    pub fn input(&self, t: usize) -> Vector {
        self.inputs.col(t)
    }

    pub fn target(&self, t: usize) -> Vector {
        self.targets.col(t)
    }

    /// Keeps only the listed columns, in order.
    fn select(&self, indices: &[usize]) -> TrainingSet {
        let inputs: Vec<Vector> = indices.iter().map(|&t| self.input(t)).collect();
        let targets: Vec<Vector> = indices.iter().map(|&t| self.target(t)).collect();
        TrainingSet::from_examples(&inputs, &targets)
            .expect("selected columns keep the original shapes")
    }

    /// Splits into (train, holdout) by a seeded shuffle. The holdout takes
    /// ceil(T·fraction) columns; both parts must end up nonempty.
    pub fn split(
        &self,
        holdout_fraction: f64,
        rng: &mut RngStream,
    ) -> Result<(TrainingSet, TrainingSet)> {
        if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "holdout fraction must lie in (0,1), got {holdout_fraction}"
            )));
        }
        let t = self.len();
        let holdout = (t as f64 * holdout_fraction).ceil() as usize;
        if holdout == 0 || holdout >= t {
            return Err(Error::invalid(format!(
                "split of {t} examples at fraction {holdout_fraction} leaves an empty part"
            )));
        }
        let mut order: Vec<usize> = (0..t).collect();
        order.shuffle(rng);
        let (hold_idx, train_idx) = order.split_at(holdout);
        Ok((self.select(train_idx), self.select(hold_idx)))
    }

    /// Writes the set as CSV: header `x1,..,xn,y1,..,yk`, then one example
    /// per row. Values use shortest round-trip decimal rendering, so a
    /// reload reproduces every bit.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let n = self.input_dim();
        let k = self.target_dim();
        let header: Vec<String> = (1..=n)
            .map(|i| format!("x{i}"))
            .chain((1..=k).map(|i| format!("y{i}")))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for t in 0..self.len() {
            for i in 0..n {
                if i > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", self.inputs[(i, t)]);
            }
            for i in 0..k {
                out.push(',');
                let _ = write!(out, "{}", self.targets[(i, t)]);
            }
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Reads a CSV written by [`save_csv`](Self::save_csv). Row width and
    /// numeric errors carry 1-based line numbers (the header is line 1).
    pub fn load_csv(path: &Path) -> Result<TrainingSet> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::invalid("empty CSV file"))?;
        let (n, k) = parse_header(header)?;

        let mut inputs: Vec<Vector> = Vec::new();
        let mut targets: Vec<Vector> = Vec::new();
        for (idx, line) in lines {
            let line_no = idx + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n + k {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {} fields, found {}", n + k, fields.len()),
                });
            }
            let mut values = Vec::with_capacity(n + k);
            for field in fields {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid number {field:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("non-finite value {field:?}"),
                    });
                }
                values.push(v);
            }
            targets.push(Vector::new(values.split_off(n)));
            inputs.push(Vector::new(values));
        }
        if inputs.is_empty() {
            return Err(Error::invalid("CSV file contains no examples"));
        }
        TrainingSet::from_examples(&inputs, &targets)
    }
}

/// Parses `x1,..,xn,y1,..,yk`, returning (n, k).
fn parse_header(header: &str) -> Result<(usize, usize)> {
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let n = names.iter().take_while(|s| s.starts_with('x')).count();
    let k = names.len() - n;
    if n == 0 || k == 0 {
        return Err(Error::Parse {
            line: 1,
            message: format!("header must list x columns then y columns, got {header:?}"),
        });
    }
    for (i, name) in names.iter().enumerate() {
        let expected = if i < n {
            format!("x{}", i + 1)
        } else {
            format!("y{}", i - n + 1)
        };
        if *name != expected {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header column {expected:?}, got {name:?}"),
            });
        }
    }
    Ok((n, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_set(n: usize, k: usize, t: usize, seed: u64) -> TrainingSet {
        let mut rng = RngStream::new(seed, 0);
        let inputs = Matrix::from_fn(n, t, |_, _| rng.random_range(-5.0..5.0));
        let targets = Matrix::from_fn(k, t, |_, _| rng.random_range(-5.0..5.0));
        TrainingSet::new(inputs, targets).unwrap()
    }

    /// Columns as sorted list for multiset comparison.
    fn column_multiset(set: &TrainingSet) -> Vec<Vec<u64>> {
        let mut cols: Vec<Vec<u64>> = (0..set.len())
            .map(|t| {
                set.input(t)
                    .iter()
                    .chain(set.target(t).iter())
                    .map(|v| v.to_bits())
                    .collect()
            })
            .collect();
        cols.sort();
        cols
    }

    #[test]
    fn new_rejects_mismatched_or_empty() {
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(1, 4);
        assert!(TrainingSet::new(a.clone(), b).is_err());
        assert!(TrainingSet::new(Matrix::zeros(2, 0), Matrix::zeros(1, 0)).is_err());
        assert!(TrainingSet::new(a, Matrix::zeros(1, 3)).is_ok());
    }

    #[test]
    fn split_sizes_follow_ceiling_rule() {
        let set = random_set(3, 1, 10, 1);
        let mut rng = RngStream::new(5, 0);
        let (train, hold) = set.split(0.2, &mut rng).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(hold.len(), 2);
    }

    #[test]
    fn split_preserves_column_multiset() {
        let set = random_set(4, 2, 23, 2);
        let mut rng = RngStream::new(6, 0);
        let (train, hold) = set.split(0.3, &mut rng).unwrap();
        let mut combined = column_multiset(&train);
        combined.extend(column_multiset(&hold));
        combined.sort();
        assert_eq!(combined, column_multiset(&set));
    }

    #[test]
    fn split_is_seed_deterministic() {
        let set = random_set(2, 1, 17, 3);
        let (t1, h1) = set.split(0.25, &mut RngStream::new(11, 4)).unwrap();
        let (t2, h2) = set.split(0.25, &mut RngStream::new(11, 4)).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(h1, h2);
    }

    #[test]
    fn split_rejects_bad_fraction_and_degenerate_parts() {
        let set = random_set(2, 1, 4, 4);
        let mut rng = RngStream::new(0, 0);
        assert!(set.split(0.0, &mut rng).is_err());
        assert!(set.split(1.0, &mut rng).is_err());
        assert!(set.split(-0.5, &mut rng).is_err());
        // ceil(4 * 0.9) = 4 leaves train empty.
        assert!(set.split(0.9, &mut rng).is_err());
    }

    #[test]
    fn csv_round_trip_is_value_exact() {
        let set = random_set(3, 2, 7, 5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.csv");
        set.save_csv(&path).unwrap();
        let loaded = TrainingSet::load_csv(&path).unwrap();
        assert_eq!(set, loaded);
    }

    #[test]
    fn csv_header_is_documented_layout() {
        let set = random_set(2, 1, 1, 6);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("set.csv");
        set.save_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), "x1,x2,y1");
    }

    #[test]
    fn load_reports_offending_line_for_bad_width() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x1,y1\n1.0,2.0\n3.0\n").unwrap();
        match TrainingSet::load_csv(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn load_reports_offending_line_for_bad_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "x1,y1\n1.0,huh\n").unwrap();
        match TrainingSet::load_csv(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_empty_and_headerless_files() {
        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("empty.csv");
        std::fs::write(&empty, "").unwrap();
        assert!(TrainingSet::load_csv(&empty).is_err());

        let header_only = dir.path().join("header.csv");
        std::fs::write(&header_only, "x1,y1\n").unwrap();
        assert!(TrainingSet::load_csv(&header_only).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn round_trip_identity(
                n in 1usize..=10,
                k in 1usize..=10,
                t in 1usize..=100,
                seed in any::<u64>(),
            ) {
                let set = random_set(n, k, t, seed);
                let dir = tempfile::tempdir().unwrap();
                let path = dir.path().join("set.csv");
                set.save_csv(&path).unwrap();
                prop_assert_eq!(TrainingSet::load_csv(&path).unwrap(), set);
            }

            #[test]
            fn split_never_duplicates_or_drops(
                t in 2usize..=60,
                numer in 1usize..=9,
                seed in any::<u64>(),
            ) {
                let fraction = numer as f64 / 10.0;
                let set = random_set(3, 2, t, seed);
                let mut rng = RngStream::new(seed ^ 0x5eed, 1);
                let holdout = (t as f64 * fraction).ceil() as usize;
                prop_assume!(holdout >= 1 && holdout < t);
                let (train, hold) = set.split(fraction, &mut rng).unwrap();
                prop_assert_eq!(train.len() + hold.len(), t);
                let mut combined = column_multiset(&train);
                combined.extend(column_multiset(&hold));
                combined.sort();
                prop_assert_eq!(combined, column_multiset(&set));
            }
        }
    }
}
