//! Binary model files.
//!
//! ```text
//! MLP v1; dims=3,512,512,512,7; act=relu; bytes=12288+4096,2097152+4096,...
//! input_mean=<f64>,<f64>,<f64>
//! input_scale=...
//! output_mean=...
//! output_scale=...
//! <W0 row-major f64 LE><b0><W1><b1>...
//! ```
//!
//! Header floats use shortest round-trip formatting, so save → load is
//! bit-exact.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{Activation, MlpModel, Normalization};
use crate::error::{Error, Result};

const MAGIC: &str = "MLP v1";

fn fmt_list<T: std::fmt::Debug>(v: impl IntoIterator<Item = T>) -> String {
    v.into_iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

fn bad(msg: impl Into<String>) -> Error {
    Error::ModelFormat(msg.into())
}

impl MlpModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let layer_bytes: Vec<String> = self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| format!("{}+{}", w.len() * 8, b.len() * 8))
            .collect();
        let mut out = format!(
            "{MAGIC}; dims={}; act={}; bytes={}\n",
            fmt_list(&self.dims),
            self.activation.tag(),
            layer_bytes.join(",")
        );
        out.push_str(&format!("input_mean={}\n", fmt_list(self.input.mean.iter())));
        out.push_str(&format!("input_scale={}\n", fmt_list(self.input.scale.iter())));
        out.push_str(&format!("output_mean={}\n", fmt_list(self.output.mean.iter())));
        out.push_str(&format!("output_scale={}\n", fmt_list(self.output.scale.iter())));
        let mut bytes = out.into_bytes();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for r in 0..w.nrows() {
                for c in 0..w.ncols() {
                    bytes.extend_from_slice(&w[(r, c)].to_le_bytes());
                }
            }
            for v in b.iter() {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        }
        bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut rest = bytes;
        let mut next_line = || -> Result<String> {
            let end = rest.iter().position(|&b| b == b'\n').ok_or_else(|| bad("truncated header"))?;
            let line = std::str::from_utf8(&rest[..end]).map_err(|_| bad("header is not UTF-8"))?.to_string();
            rest = &rest[end + 1..];
            Ok(line)
        };

        let header = next_line()?;
        let mut fields = header.split(';').map(str::trim);
        if fields.next() != Some(MAGIC) {
            return Err(bad(format!("expected `{MAGIC}` header")));
        }
        let (mut dims, mut act, mut sizes) = (None, None, None);
        for f in fields {
            let (k, v) = f.split_once('=').ok_or_else(|| bad(format!("header field `{f}`")))?;
            match k {
                "dims" => dims = Some(parse_list::<usize>(v)?),
                "act" => act = Some(Activation::from_tag(v)?),
                "bytes" => {
                    let mut s = Vec::new();
                    for pair in v.split(',') {
                        let (w, b) = pair.split_once('+').ok_or_else(|| bad("bytes entry"))?;
                        s.push((parse_one::<usize>(w)?, parse_one::<usize>(b)?));
                    }
                    sizes = Some(s);
                }
                other => return Err(bad(format!("unknown header key `{other}`"))),
            }
        }
        let dims = dims.ok_or_else(|| bad("missing dims"))?;
        let act = act.ok_or_else(|| bad("missing act"))?;
        let sizes = sizes.ok_or_else(|| bad("missing bytes"))?;
        if dims.len() < 2 || sizes.len() != dims.len() - 1 {
            return Err(bad("dims and bytes disagree"));
        }

        let mut vector_line = |key: &str, len: usize| -> Result<DVector<f64>> {
            let line = next_line()?;
            let v = line
                .strip_prefix(key)
                .and_then(|s| s.strip_prefix('='))
                .ok_or_else(|| bad(format!("expected `{key}=`")))?;
            let vals = parse_list::<f64>(v)?;
            if vals.len() != len {
                return Err(bad(format!("{key}: expected {len} values")));
            }
            Ok(DVector::from_vec(vals))
        };
        let n_in = dims[0];
        let n_out = *dims.last().expect("len ≥ 2");
        let input = Normalization { mean: vector_line("input_mean", n_in)?, scale: vector_line("input_scale", n_in)? };
        let output =
            Normalization { mean: vector_line("output_mean", n_out)?, scale: vector_line("output_scale", n_out)? };

        let mut body = rest;
        let mut take = |n: usize| -> Result<Vec<f64>> {
            if body.len() < n || n % 8 != 0 {
                return Err(bad("truncated parameter blob"));
            }
            let (head, tail) = body.split_at(n);
            body = tail;
            Ok(head.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
        };
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for (l, &(wb, bb)) in sizes.iter().enumerate() {
            let (rows, cols) = (dims[l + 1], dims[l]);
            if wb != rows * cols * 8 || bb != rows * 8 {
                return Err(bad(format!("layer {l}: byte lengths do not match dims")));
            }
            weights.push(DMatrix::from_row_slice(rows, cols, &take(wb)?));
            biases.push(DVector::from_vec(take(bb)?));
        }
        if !body.is_empty() {
            return Err(bad("trailing bytes after parameters"));
        }
        MlpModel::new(weights, biases, act, input, output)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::io::write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn parse_one<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| bad(format!("cannot parse `{s}`")))
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',').map(parse_one).collect()
}
