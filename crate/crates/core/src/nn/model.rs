use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layers::{
    Activation, BatchNormCache, BatchNormLayer, DropoutLayer, LinearLayer, DEFAULT_DROPOUT,
};
use super::{Matrix, NnError};

/// Input width, two hidden layers of 512, one output score.
pub const DEFAULT_DIMS: [usize; 4] = [4096, 512, 512, 1];

/// BatchNorm → Dropout → Linear → activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub norm: BatchNormLayer,
    pub dropout: DropoutLayer,
    pub linear: LinearLayer,
    pub activation: Activation,
    /// Frozen blocks normalise with running statistics, never update them,
    /// and report zero parameter gradients.
    pub frozen: bool,
}

impl Block {
    pub fn param_count(&self) -> usize {
        2 * self.norm.width() + self.linear.weight.as_slice().len() + self.linear.bias.len()
    }
}

#[derive(Debug, Clone)]
struct BlockCache {
    norm: Option<BatchNormCache>,
    mask: Vec<f64>,
    linear_input: Matrix,
    output: Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Gamma,
    Beta,
    Weight,
    Bias,
}

/// Names one trainable tensor. Blocks are numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId {
    pub block: usize,
    pub kind: ParamKind,
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ParamKind::Gamma => "norm.gamma",
            ParamKind::Beta => "norm.beta",
            ParamKind::Weight => "linear.weight",
            ParamKind::Bias => "linear.bias",
        };
        write!(f, "block{}.{kind}", self.block)
    }
}

/// Mutable view of one parameter tensor and its gradient.
pub struct ParamMut<'a> {
    pub id: ParamId,
    pub value: &'a mut [f64],
    pub grad: &'a [f64],
    pub frozen: bool,
}

/// Stack of [`Block`]s; every block uses ReLU except the last, which ends in
/// a sigmoid so predictions lie in (0, 1).
#[derive(Debug, Clone)]
pub struct MlpModel {
    dims: Vec<usize>,
    blocks: Vec<Block>,
    cache: Option<Vec<BlockCache>>,
}

impl PartialEq for MlpModel {
    /// Compares architecture, parameters, running statistics and layer
    /// settings; ignores gradients and forward caches.
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims
            && self.blocks.len() == other.blocks.len()
            && self.blocks.iter().zip(&other.blocks).all(|(a, b)| {
                a.norm.gamma == b.norm.gamma
                    && a.norm.beta == b.norm.beta
                    && a.norm.running_mean == b.norm.running_mean
                    && a.norm.running_var == b.norm.running_var
                    && a.norm.momentum == b.norm.momentum
                    && a.norm.eps == b.norm.eps
                    && a.dropout == b.dropout
                    && a.linear.weight == b.linear.weight
                    && a.linear.bias == b.linear.bias
                    && a.activation == b.activation
                    && a.frozen == b.frozen
            })
    }
}

/// Parses a comma-separated dimension list such as `4096,512,512,1`.
pub fn parse_dims(s: &str) -> Result<Vec<usize>, NnError> {
    s.split(',')
        .map(|t| {
            let v: i64 = t
                .trim()
                .parse()
                .map_err(|_| NnError::InvalidDims(format!("cannot parse {t:?} as a dimension")))?;
            if v <= 0 {
                return Err(NnError::InvalidDims(format!(
                    "dimension {v} is not positive"
                )));
            }
            Ok(v as usize)
        })
        .collect()
}

fn validate_dims(dims: &[usize]) -> Result<(), NnError> {
    if dims.len() < 2 {
        return Err(NnError::InvalidDims(format!(
            "need at least an input and an output width, got {dims:?}"
        )));
    }
    if dims.contains(&0) {
        return Err(NnError::InvalidDims(format!(
            "dimensions must be positive, got {dims:?}"
        )));
    }
    if dims[dims.len() - 1] != 1 {
        return Err(NnError::InvalidDims(format!(
            "the head must produce a single score, got {dims:?}"
        )));
    }
    Ok(())
}

/// Parameter count implied by `dims` without building a model.
pub fn param_count_for(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| 2 * w[0] + w[0] * w[1] + w[1]).sum()
}

impl MlpModel {
    /// Deterministic for a given `(dims, seed)`. Dropout defaults to 0.1.
    pub fn init(dims: &[usize], seed: u64) -> Result<Self, NnError> {
        validate_dims(dims)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let last = dims.len() - 2;
        let blocks = dims
            .windows(2)
            .enumerate()
            .map(|(i, w)| Block {
                norm: BatchNormLayer::new(w[0]),
                dropout: DropoutLayer::new(DEFAULT_DROPOUT),
                linear: LinearLayer::init(w[0], w[1], &mut rng),
                activation: if i == last {
                    Activation::Sigmoid
                } else {
                    Activation::Relu
                },
                frozen: false,
            })
            .collect();
        Ok(MlpModel {
            dims: dims.to_vec(),
            blocks,
            cache: None,
        })
    }

    /// Rebuilds a model from already-populated blocks (checkpoint loading).
    pub fn from_blocks(dims: Vec<usize>, blocks: Vec<Block>) -> Result<Self, NnError> {
        validate_dims(&dims)?;
        if blocks.len() != dims.len() - 1 {
            return Err(NnError::InvalidDims(format!(
                "{} blocks for dims {dims:?}",
                blocks.len()
            )));
        }
        for (b, w) in blocks.iter().zip(dims.windows(2)) {
            if b.norm.width() != w[0] || b.linear.in_dim() != w[0] || b.linear.out_dim() != w[1] {
                return Err(NnError::InvalidDims(format!(
                    "block shapes do not match dims {dims:?}"
                )));
            }
        }
        Ok(MlpModel {
            dims,
            blocks,
            cache: None,
        })
    }

    pub fn set_dropout(&mut self, p: f64) -> Result<(), NnError> {
        if !(0.0..1.0).contains(&p) {
            return Err(NnError::InvalidDropout(p));
        }
        for b in &mut self.blocks {
            b.dropout.p = p;
        }
        Ok(())
    }

    pub fn dropout(&self) -> f64 {
        self.blocks[0].dropout.p
    }

    /// Marks blocks (1-based) as frozen; all others become trainable.
    pub fn set_frozen(&mut self, blocks: &[usize]) -> Result<(), NnError> {
        if let Some(&bad) = blocks.iter().find(|&&b| b == 0 || b > self.blocks.len()) {
            return Err(NnError::InvalidBlock {
                block: bad,
                count: self.blocks.len(),
            });
        }
        for (i, b) in self.blocks.iter_mut().enumerate() {
            b.frozen = blocks.contains(&(i + 1));
        }
        Ok(())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn blocks_mut(&mut self) -> &mut [Block] {
        &mut self.blocks
    }

    /// Trainable parameters: weights, biases, gammas and betas. Running
    /// statistics are not counted.
    pub fn param_count(&self) -> usize {
        self.blocks.iter().map(Block::param_count).sum()
    }

    fn check_input(&self, x: &Matrix) -> Result<(), NnError> {
        if x.cols() != self.input_dim() {
            return Err(NnError::DimensionMismatch {
                what: "input features",
                expected: self.input_dim(),
                found: x.cols(),
            });
        }
        Ok(())
    }

    /// Inference pass: running statistics, no dropout, no state touched.
    pub fn forward_eval(&self, x: &Matrix) -> Result<Matrix, NnError> {
        self.check_input(x)?;
        let mut h = x.clone();
        for b in &self.blocks {
            let z = b.linear.forward(&b.norm.forward_eval(&h));
            h = z.map(|v| b.activation.apply(v));
        }
        debug_assert!(h.is_finite());
        Ok(h)
    }

    /// Training pass: batch statistics (for unfrozen blocks), dropout masks
    /// drawn from `rng`, and everything backward needs is cached.
    pub fn forward_train<R: Rng>(&mut self, x: &Matrix, rng: &mut R) -> Result<Matrix, NnError> {
        self.check_input(x)?;
        if x.rows() < 2 {
            return Err(NnError::BatchTooSmall { rows: x.rows() });
        }
        let mut caches = Vec::with_capacity(self.blocks.len());
        let mut h = x.clone();
        for b in &mut self.blocks {
            let (normed, norm_cache) = if b.frozen {
                (b.norm.forward_eval(&h), None)
            } else {
                let (y, c) = b.norm.forward_train(&h);
                (y, Some(c))
            };
            let (dropped, mask) = b.dropout.forward_train(&normed, rng);
            let z = b.linear.forward(&dropped);
            let act = b.activation;
            h = z.map(|v| act.apply(v));
            caches.push(BlockCache {
                norm: norm_cache,
                mask,
                linear_input: dropped,
                output: h.clone(),
            });
        }
        debug_assert!(h.is_finite());
        self.cache = Some(caches);
        Ok(h)
    }

    /// Backpropagates `grad_output` (dLoss/dPrediction) through the cached
    /// training pass, stores every parameter gradient and returns the
    /// gradient with respect to the input batch. Consumes the cache.
    pub fn backward(&mut self, grad_output: &Matrix) -> Result<Matrix, NnError> {
        let caches = self.cache.take().ok_or(NnError::NoTrainForward)?;
        let out_shape = caches.last().map(|c| c.output.shape()).unwrap_or((0, 0));
        if grad_output.shape() != out_shape {
            return Err(NnError::ShapeMismatch {
                expected: out_shape,
                found: grad_output.shape(),
            });
        }
        let mut g = grad_output.clone();
        for (b, c) in self.blocks.iter_mut().zip(&caches).rev() {
            let act = b.activation;
            for (gv, y) in g.as_mut_slice().iter_mut().zip(c.output.as_slice()) {
                *gv *= act.derivative_from_output(*y);
            }
            g = b.linear.backward(&c.linear_input, &g);
            g = DropoutLayer::backward(&c.mask, &g);
            g = match &c.norm {
                Some(nc) => b.norm.backward(nc, &g),
                None => b.norm.backward_eval(&g),
            };
            if b.frozen {
                b.linear.zero_grad();
            }
        }
        Ok(g)
    }

    pub fn has_cache(&self) -> bool {
        self.cache.is_some()
    }

    /// Visits every trainable tensor in checkpoint order (block 1 → n;
    /// gamma, beta, weight, bias).
    pub fn params_mut(&mut self) -> Vec<ParamMut<'_>> {
        let mut out = Vec::with_capacity(4 * self.blocks.len());
        for (i, b) in self.blocks.iter_mut().enumerate() {
            let block = i + 1;
            let frozen = b.frozen;
            let mk = |kind| ParamId { block, kind };
            out.push(ParamMut {
                id: mk(ParamKind::Gamma),
                value: &mut b.norm.gamma,
                grad: &b.norm.grad_gamma,
                frozen,
            });
            out.push(ParamMut {
                id: mk(ParamKind::Beta),
                value: &mut b.norm.beta,
                grad: &b.norm.grad_beta,
                frozen,
            });
            out.push(ParamMut {
                id: mk(ParamKind::Weight),
                value: b.linear.weight.as_mut_slice(),
                grad: b.linear.grad_weight.as_slice(),
                frozen,
            });
            out.push(ParamMut {
                id: mk(ParamKind::Bias),
                value: &mut b.linear.bias,
                grad: &b.linear.grad_bias,
                frozen,
            });
        }
        out
    }

    /// Copies of all trainable values, in [`params_mut`](Self::params_mut)
    /// order.
    pub fn param_values(&self) -> Vec<(ParamId, Vec<f64>)> {
        let mut out = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            let block = i + 1;
            out.push((
                ParamId {
                    block,
                    kind: ParamKind::Gamma,
                },
                b.norm.gamma.clone(),
            ));
            out.push((
                ParamId {
                    block,
                    kind: ParamKind::Beta,
                },
                b.norm.beta.clone(),
            ));
            out.push((
                ParamId {
                    block,
                    kind: ParamKind::Weight,
                },
                b.linear.weight.as_slice().to_vec(),
            ));
            out.push((
                ParamId {
                    block,
                    kind: ParamKind::Bias,
                },
                b.linear.bias.clone(),
            ));
        }
        out
    }

    /// Gradients in the same order as [`param_values`](Self::param_values).
    pub fn param_grads(&self) -> Vec<(ParamId, Vec<f64>)> {
        let mut out = Vec::new();
        for (i, b) in self.blocks.iter().enumerate() {
            let block = i + 1;
            out.push((
                ParamId {
                    block,
                    kind: ParamKind::Gamma,
                },
                b.norm.grad_gamma.clone(),
            ));
            out.push((
                ParamId {
                    block,
                    kind: ParamKind::Beta,
                },
                b.norm.grad_beta.clone(),
            ));
            out.push((
                ParamId {
                    block,
                    kind: ParamKind::Weight,
                },
                b.linear.grad_weight.as_slice().to_vec(),
            ));
            out.push((
                ParamId {
                    block,
                    kind: ParamKind::Bias,
                },
                b.linear.grad_bias.clone(),
            ));
        }
        out
    }
}
