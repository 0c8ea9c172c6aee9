//! Binary checkpoint format.
//!
//! All integers and reals are little-endian.
//!
//! ```text
//! magic          4 bytes   "MEMK"
//! version        u32       1
//! n_dims         u32
//! dims           n_dims × u32
//! per block 1..n_dims-1, widths in = dims[i], out = dims[i+1]:
//!   gamma          in  × f64
//!   beta           in  × f64
//!   running_mean   in  × f64
//!   running_var    in  × f64
//!   weight         out × in × f64 (row-major, one row per output unit)
//!   bias           out × f64
//! trailer:
//!   target         u8        0 none, 1 short-term, 2 long-term
//!   dropout        f64
//!   seed           u64
//!   epochs_run     u32
//!   best_val_spearman f64    NaN when never defined
//! ```

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::data::Target;
use crate::nn::{Activation, BatchNormLayer, Block, DropoutLayer, LinearLayer, Matrix, MlpModel};

pub const MAGIC: [u8; 4] = *b"MEMK";
pub const FORMAT_VERSION: u32 = 1;
const TRAILER_LEN: usize = 1 + 8 + 8 + 4 + 8;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("bad magic bytes {found:?}, expected \"MEMK\"")]
    BadMagic { found: Vec<u8> },
    #[error("unsupported checkpoint version {found} (this build reads {FORMAT_VERSION})")]
    UnsupportedVersion { found: u32 },
    #[error("truncated checkpoint: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("checkpoint has {extra} unexpected trailing bytes")]
    TrailingBytes { extra: usize },
    #[error("invalid checkpoint contents: {0}")]
    Invalid(String),
    #[error(
        "architecture mismatch: checkpoint expects {checkpoint} input features, data has {data}"
    )]
    ArchitectureMismatch { checkpoint: usize, data: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointMeta {
    pub target: Option<Target>,
    pub seed: u64,
    pub epochs_run: u32,
    pub best_val_spearman: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: MlpModel,
    pub meta: CheckpointMeta,
}

impl Checkpoint {
    pub fn ensure_input_dim(&self, data_dim: usize) -> Result<(), CheckpointError> {
        if self.model.input_dim() != data_dim {
            return Err(CheckpointError::ArchitectureMismatch {
                checkpoint: self.model.input_dim(),
                data: data_dim,
            });
        }
        Ok(())
    }
}

/// Exact size of the encoding for `dims`.
pub fn encoded_len(dims: &[usize]) -> usize {
    let header = 4 + 4 + 4 + 4 * dims.len();
    let reals: usize = dims.windows(2).map(|w| 4 * w[0] + w[0] * w[1] + w[1]).sum();
    header + 8 * reals + TRAILER_LEN
}

pub fn encode(model: &MlpModel, meta: &CheckpointMeta) -> Vec<u8> {
    let dims = model.dims();
    let mut out = Vec::with_capacity(encoded_len(dims));
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
    for &d in dims {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    let mut reals = |xs: &[f64]| {
        for x in xs {
            out.extend_from_slice(&x.to_le_bytes());
        }
    };
    for b in model.blocks() {
        reals(&b.norm.gamma);
        reals(&b.norm.beta);
        reals(&b.norm.running_mean);
        reals(&b.norm.running_var);
        reals(b.linear.weight.as_slice());
        reals(&b.linear.bias);
    }
    out.push(match meta.target {
        None => 0,
        Some(Target::ShortTerm) => 1,
        Some(Target::LongTerm) => 2,
    });
    out.extend_from_slice(&model.dropout().to_le_bytes());
    out.extend_from_slice(&meta.seed.to_le_bytes());
    out.extend_from_slice(&meta.epochs_run.to_le_bytes());
    out.extend_from_slice(&meta.best_val_spearman.unwrap_or(f64::NAN).to_le_bytes());
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, expected_total: usize) -> Result<&'a [u8], CheckpointError> {
        if self.pos + n > self.bytes.len() {
            return Err(CheckpointError::Truncated {
                expected: expected_total.max(self.pos + n),
                actual: self.bytes.len(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, total: usize) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4, total)?.try_into().unwrap()))
    }

    fn u64(&mut self, total: usize) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8, total)?.try_into().unwrap()))
    }

    fn f64(&mut self, total: usize) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8, total)?.try_into().unwrap()))
    }

    fn reals(&mut self, n: usize, total: usize) -> Result<Vec<f64>, CheckpointError> {
        let raw = self.take(8 * n, total)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4, 12).map_err(|_| CheckpointError::BadMagic {
        found: bytes[..bytes.len().min(4)].to_vec(),
    })?;
    if magic != MAGIC {
        return Err(CheckpointError::BadMagic {
            found: magic.to_vec(),
        });
    }
    let version = r.u32(12)?;
    if version != FORMAT_VERSION {
        return Err(CheckpointError::UnsupportedVersion { found: version });
    }
    let n_dims = r.u32(12)? as usize;
    if !(2..=64).contains(&n_dims) {
        return Err(CheckpointError::Invalid(format!("{n_dims} dimensions")));
    }
    let dims = (0..n_dims)
        .map(|_| r.u32(12 + 4 * n_dims).map(|d| d as usize))
        .collect::<Result<Vec<_>, _>>()?;
    if dims.contains(&0) || dims[n_dims - 1] != 1 {
        return Err(CheckpointError::Invalid(format!("dims {dims:?}")));
    }
    let total = encoded_len(&dims);

    let mut blocks = Vec::with_capacity(n_dims - 1);
    let last = n_dims - 2;
    for (i, w) in dims.windows(2).enumerate() {
        let (din, dout) = (w[0], w[1]);
        let mut norm = BatchNormLayer::new(din);
        norm.gamma = r.reals(din, total)?;
        norm.beta = r.reals(din, total)?;
        norm.running_mean = r.reals(din, total)?;
        norm.running_var = r.reals(din, total)?;
        let weight = Matrix::new(dout, din, r.reals(dout * din, total)?)
            .map_err(|e| CheckpointError::Invalid(e.to_string()))?;
        let bias = r.reals(dout, total)?;
        if norm
            .running_var
            .iter()
            .any(|&v| !(v > 0.0 && v.is_finite()))
        {
            return Err(CheckpointError::Invalid(format!(
                "block {} has a non-positive running variance",
                i + 1
            )));
        }
        let all_finite = [&norm.gamma, &norm.beta, &norm.running_mean, &bias]
            .iter()
            .all(|xs| xs.iter().all(|v| v.is_finite()))
            && weight.is_finite();
        if !all_finite {
            return Err(CheckpointError::Invalid(format!(
                "block {} holds non-finite parameters",
                i + 1
            )));
        }
        blocks.push(Block {
            norm,
            dropout: DropoutLayer::new(0.0),
            linear: LinearLayer {
                grad_weight: Matrix::zeros(dout, din),
                grad_bias: vec![0.0; dout],
                weight,
                bias,
            },
            activation: if i == last {
                Activation::Sigmoid
            } else {
                Activation::Relu
            },
            frozen: false,
        });
    }

    let target = match r.take(1, total)?[0] {
        0 => None,
        1 => Some(Target::ShortTerm),
        2 => Some(Target::LongTerm),
        t => return Err(CheckpointError::Invalid(format!("target tag {t}"))),
    };
    let dropout = r.f64(total)?;
    let seed = r.u64(total)?;
    let epochs_run = r.u32(total)?;
    let best = r.f64(total)?;
    if r.pos != bytes.len() {
        return Err(CheckpointError::TrailingBytes {
            extra: bytes.len() - r.pos,
        });
    }

    let mut model =
        MlpModel::from_blocks(dims, blocks).map_err(|e| CheckpointError::Invalid(e.to_string()))?;
    model
        .set_dropout(dropout)
        .map_err(|e| CheckpointError::Invalid(e.to_string()))?;
    Ok(Checkpoint {
        model,
        meta: CheckpointMeta {
            target,
            seed,
            epochs_run,
            best_val_spearman: if best.is_nan() { None } else { Some(best) },
        },
    })
}

pub fn save_checkpoint(
    path: impl AsRef<Path>,
    model: &MlpModel,
    meta: &CheckpointMeta,
) -> Result<(), CheckpointError> {
    let path = path.as_ref();
    fs::write(path, encode(model, meta)).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, CheckpointError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&bytes)
}
