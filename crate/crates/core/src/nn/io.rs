//! Network persistence as a versioned flat text file.
//!
//! Layout, one item per line:
//!
//! ```text
//! format 1
//! layers <L>
//! widths <n0> <n1> ... <nL>
//! activations <name> ... <name>   (L names)
//! <parameter>                     (param_count lines, documented order)
//! ```
//!
//! Values use shortest round-trip decimal rendering, so save/load
//! reproduces every parameter bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::{Activation, DenseLayer, Network};
use crate::numerics::{Matrix, Vector};
use crate::{Error, Result};

const FORMAT_VERSION: u32 = 1;

impl Network {
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        let _ = writeln!(out, "format {FORMAT_VERSION}");
        let _ = writeln!(out, "layers {}", self.layers().len());
        let widths: Vec<String> = self.widths().iter().map(|w| w.to_string()).collect();
        let _ = writeln!(out, "widths {}", widths.join(" "));
        let names: Vec<&str> = self.layers().iter().map(|l| l.activation().name()).collect();
        let _ = writeln!(out, "activations {}", names.join(" "));
        for p in self.params() {
            let _ = writeln!(out, "{p}");
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Network> {
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
        if version != [FORMAT_VERSION.to_string()] {
            return Err(Error::Parse {
                line: line_no,
                message: format!("unsupported format version {version:?}"),
            });
        }
        let (line_no, layers) = field("layers")?;
        let layer_count: usize = parse_one(&layers, line_no, "layer count")?;
        let (line_no, widths) = field("widths")?;
        let widths: Vec<usize> = parse_list(&widths, line_no, "width")?;
        if widths.len() != layer_count + 1 {
            return Err(Error::Parse {
                line: line_no,
                message: format!(
                    "{} layers need {} widths, got {}",
                    layer_count,
                    layer_count + 1,
                    widths.len()
                ),
            });
        }
        let (line_no, names) = field("activations")?;
        if names.len() != layer_count {
            return Err(Error::Parse {
                line: line_no,
                message: format!(
                    "{} layers need {} activations, got {}",
                    layer_count,
                    layer_count,
                    names.len()
                ),
            });
        }
        let mut activations = Vec::with_capacity(layer_count);
        for name in &names {
            activations.push(Activation::from_name(name).ok_or(Error::Parse {
                line: line_no,
                message: format!("unknown activation {name:?}"),
            })?);
        }

        let expected: usize = widths.windows(2).map(|w| w[1] * (w[0] + 1)).sum();
        let mut params = Vec::with_capacity(expected);
        let mut last_line = line_no;
        for (idx, line) in lines {
            last_line = idx + 1;
            if line.is_empty() {
                continue;
            }
            let v: f64 = line.trim().parse().map_err(|_| Error::Parse {
                line: last_line,
                message: format!("invalid parameter {line:?}"),
            })?;
            params.push(v);
        }
        if params.len() != expected {
            return Err(Error::Parse {
                line: last_line,
                message: format!("expected {expected} parameters, found {}", params.len()),
            });
        }

        let mut layers = Vec::with_capacity(layer_count);
        let mut offset = 0;
        for l in 0..layer_count {
            let (n_in, n_out) = (widths[l], widths[l + 1]);
            let weights =
                Matrix::from_vec(n_out, n_in, params[offset..offset + n_out * n_in].to_vec())?;
            offset += n_out * n_in;
            let bias = Vector::new(params[offset..offset + n_out].to_vec());
            offset += n_out;
            layers.push(DenseLayer::new(weights, bias, activations[l])?);
        }
        Network::new(layers)
    }
}

fn parse_one(parts: &[String], line: usize, what: &str) -> Result<usize> {
    if parts.len() != 1 {
        return Err(Error::Parse {
            line,
            message: format!("expected a single {what}, got {parts:?}"),
        });
    }
    parts[0].parse().map_err(|_| Error::Parse {
        line,
        message: format!("invalid {what} {:?}", parts[0]),
    })
}

fn parse_list(parts: &[String], line: usize, what: &str) -> Result<Vec<usize>> {
    parts
        .iter()
        .map(|p| {
            p.parse().map_err(|_| Error::Parse {
                line,
                message: format!("invalid {what} {p:?}"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::WeightInit;
    use crate::numerics::RngStream;

    fn sample_net(seed: u64) -> Network {
        let mut rng = RngStream::new(seed, 0);
        Network::random(
            &[2, 16, 16, 4],
            &[Activation::Relu, Activation::Relu, Activation::Softmax],
            WeightInit::ScaledUniform,
            &mut rng,
        )
        .unwrap()
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let net = sample_net(60);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.txt");
        net.save(&path).unwrap();
        let loaded = Network::load(&path).unwrap();
        assert_eq!(loaded.params(), net.params());
        assert_eq!(loaded.widths(), net.widths());
        assert_eq!(
            loaded
                .layers()
                .iter()
                .map(|l| l.activation())
                .collect::<Vec<_>>(),
            net.layers()
                .iter()
                .map(|l| l.activation())
                .collect::<Vec<_>>()
        );
    }

    #[test]
    fn header_lines_are_tagged() {
        let net = sample_net(61);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.txt");
        net.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "format 1");
        assert_eq!(lines.next().unwrap(), "layers 3");
        assert_eq!(lines.next().unwrap(), "widths 2 16 16 4");
        assert_eq!(lines.next().unwrap(), "activations relu relu softmax");
    }

    #[test]
    fn load_rejects_malformed_files() {
        let dir = tempfile::tempdir().unwrap();
        let cases = [
            ("wrong_version", "format 9\nlayers 1\nwidths 1 1\nactivations identity\n0\n0\n"),
            ("bad_tag", "shape 1\n"),
            ("bad_activation", "format 1\nlayers 1\nwidths 1 1\nactivations swish\n0\n0\n"),
            ("missing_params", "format 1\nlayers 1\nwidths 1 1\nactivations identity\n0\n"),
            (
                "excess_params",
                "format 1\nlayers 1\nwidths 1 1\nactivations identity\n0\n0\n0\n",
            ),
            (
                "width_count",
                "format 1\nlayers 2\nwidths 1 1\nactivations identity identity\n",
            ),
            (
                "hidden_softmax",
                "format 1\nlayers 2\nwidths 1 1 1\nactivations softmax identity\n0\n0\n0\n0\n",
            ),
            (
                "non_finite_param",
                "format 1\nlayers 1\nwidths 1 1\nactivations identity\nNaN\n0\n",
            ),
        ];
        for (name, text) in cases {
            let path = dir.path().join(name);
            std::fs::write(&path, text).unwrap();
            assert!(Network::load(&path).is_err(), "case {name} should fail");
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(
            &path,
            "format 1\nlayers 1\nwidths 1 1\nactivations identity\n0\nnot-a-number\n",
        )
        .unwrap();
        match Network::load(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
