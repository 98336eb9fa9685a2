use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ConvVariant, ModelConfig};
use crate::error::{Error, Result};
use crate::nn::{xavier_uniform, Tensor};

/// Ordered collection of named tensors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor) -> usize {
        self.names.push(name.into());
        self.tensors.push(tensor);
        self.tensors.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn get(&self, i: usize) -> &Tensor {
        &self.tensors[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn shapes(&self) -> Vec<&[usize]> {
        self.tensors.iter().map(|t| t.shape()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    /// Total number of scalar parameters.
    pub fn numel(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    /// Largest elementwise absolute difference against a store of the same layout.
    pub fn max_abs_diff(&self, other: &ParamStore) -> f64 {
        self.tensors
            .iter()
            .zip(&other.tensors)
            .flat_map(|(a, b)| a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Indices of an affine layer's weight and bias in the store.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dense {
    pub weight: usize,
    pub bias: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockLayout {
    pub trunk: Vec<Dense>,
    pub theta_backcast: Dense,
    pub theta_forecast: Dense,
    pub backcast: Dense,
    pub forecast: Dense,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StackLayout {
    pub conv: Vec<usize>,
    pub blocks: Vec<BlockLayout>,
    pub conv_out_len: usize,
}

/// Parameters of a whole model together with where each piece lives.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    store: ParamStore,
    stacks: Vec<StackLayout>,
    trainable: Vec<bool>,
}

/// Owned tensors of a single block, in the order the block applies them.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    /// `(weight [out, in], bias [out])` per hidden layer.
    pub trunk: Vec<(Tensor, Tensor)>,
    pub theta_backcast: (Tensor, Tensor),
    pub theta_forecast: (Tensor, Tensor),
    pub backcast: (Tensor, Tensor),
    pub forecast: (Tensor, Tensor),
}

enum Fill<'a> {
    Xavier(&'a mut ChaCha8Rng),
    Zeros,
}

impl Fill<'_> {
    fn matrix(&mut self, rows: usize, cols: usize) -> Tensor {
        match self {
            Fill::Xavier(rng) => xavier_uniform(&[rows, cols], cols, rows, *rng),
            Fill::Zeros => Tensor::zeros(&[rows, cols]),
        }
    }

    fn kernel(&self, k: usize) -> Tensor {
        match self {
            Fill::Xavier(_) => {
                // Delta at lag 0: each conv layer starts as the identity map.
                let mut v = vec![0.0; k];
                v[0] = 1.0;
                Tensor::vector(v)
            }
            Fill::Zeros => Tensor::zeros(&[k]),
        }
    }
}

fn dense(store: &mut ParamStore, fill: &mut Fill, name: &str, out: usize, inp: usize) -> Dense {
    let weight = store.push(format!("{name}.weight"), fill.matrix(out, inp));
    let bias = store.push(format!("{name}.bias"), Tensor::zeros(&[out]));
    Dense { weight, bias }
}

impl ModelParams {
    fn build(cfg: &ModelConfig, mut fill: Fill) -> Result<Self> {
        cfg.validate()?;
        let mut store = ParamStore::new();
        let mut trainable = Vec::new();
        let mut stacks = Vec::with_capacity(cfg.n_stacks);
        let width = cfg.hidden_width;
        for i in 0..cfg.n_stacks {
            let s = i + 1;
            let k = cfg.kernel_size(i);
            let layers = match cfg.conv_variant(i) {
                ConvVariant::Dcn | ConvVariant::Cnn => cfg.dilations().len(),
                _ => 0,
            };
            let conv: Vec<usize> = (0..layers)
                .map(|l| store.push(format!("stack{s}.conv{}.kernel", l + 1), fill.kernel(k)))
                .collect();
            trainable.resize(store.len(), !cfg.freeze_conv);

            let conv_out_len = cfg.conv_output_len(i).expect("validated");
            let theta_b = cfg.theta_backcast_dim(conv_out_len);
            let theta_f = cfg.theta_forecast_dim();
            let mut blocks = Vec::with_capacity(cfg.blocks_per_stack);
            for b in 1..=cfg.blocks_per_stack {
                let prefix = format!("stack{s}.block{b}");
                let mut trunk = Vec::with_capacity(cfg.hidden_depth);
                let mut inp = conv_out_len;
                for j in 1..=cfg.hidden_depth {
                    trunk.push(dense(&mut store, &mut fill, &format!("{prefix}.trunk{j}"), width, inp));
                    inp = width;
                }
                let theta_backcast = dense(&mut store, &mut fill, &format!("{prefix}.theta_b"), theta_b, width);
                let theta_forecast = dense(&mut store, &mut fill, &format!("{prefix}.theta_f"), theta_f, width);
                let backcast = dense(&mut store, &mut fill, &format!("{prefix}.backcast"), conv_out_len, theta_b);
                let forecast = dense(&mut store, &mut fill, &format!("{prefix}.forecast"), cfg.horizon, theta_f);
                blocks.push(BlockLayout {
                    trunk,
                    theta_backcast,
                    theta_forecast,
                    backcast,
                    forecast,
                });
            }
            trainable.resize(store.len(), true);
            stacks.push(StackLayout {
                conv,
                blocks,
                conv_out_len,
            });
        }
        Ok(ModelParams {
            store,
            stacks,
            trainable,
        })
    }

    /// Xavier-uniform weights, zero biases and identity conv kernels, drawn from `cfg.seed`.
    pub fn init(cfg: &ModelConfig) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Self::build(cfg, Fill::Xavier(&mut rng))
    }

    /// Every parameter zero, conv kernels included.
    pub fn zeros(cfg: &ModelConfig) -> Result<Self> {
        Self::build(cfg, Fill::Zeros)
    }

    /// Re-attaches loaded tensors to the layout implied by `cfg`, checking names and shapes.
    pub fn from_store(cfg: &ModelConfig, store: ParamStore) -> Result<Self> {
        let mut expected = Self::zeros(cfg)?;
        if expected.store.len() != store.len() {
            return Err(Error::Checkpoint(format!(
                "expected {} tensors, found {}",
                expected.store.len(),
                store.len()
            )));
        }
        for ((en, et), (n, t)) in expected.store.iter().zip(store.iter()) {
            if en != n || et.shape() != t.shape() {
                return Err(Error::Checkpoint(format!(
                    "tensor `{n}` {:?} does not match expected `{en}` {:?}",
                    t.shape(),
                    et.shape()
                )));
            }
        }
        expected.store = store;
        Ok(expected)
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn into_store(self) -> ParamStore {
        self.store
    }

    pub fn stacks(&self) -> &[StackLayout] {
        &self.stacks
    }

    /// Per-tensor flag; frozen conv kernels are `false`.
    pub fn trainable(&self) -> &[bool] {
        &self.trainable
    }

    fn pair(&self, d: Dense) -> (Tensor, Tensor) {
        (self.store.get(d.weight).clone(), self.store.get(d.bias).clone())
    }

    /// Copy of block `block` in stack `stack` (both 0-based).
    pub fn block(&self, stack: usize, block: usize) -> BlockParams {
        let l = &self.stacks[stack].blocks[block];
        BlockParams {
            trunk: l.trunk.iter().map(|d| self.pair(*d)).collect(),
            theta_backcast: self.pair(l.theta_backcast),
            theta_forecast: self.pair(l.theta_forecast),
            backcast: self.pair(l.backcast),
            forecast: self.pair(l.forecast),
        }
    }

    /// Overwrites one block's tensors; shapes must match.
    pub fn set_block(&mut self, stack: usize, block: usize, params: BlockParams) -> Result<()> {
        let l = self.stacks[stack].blocks[block].clone();
        if l.trunk.len() != params.trunk.len() {
            return Err(Error::InvalidConfig("trunk depth mismatch".into()));
        }
        let mut pairs: Vec<(Dense, (Tensor, Tensor))> = l.trunk.iter().copied().zip(params.trunk).collect();
        pairs.push((l.theta_backcast, params.theta_backcast));
        pairs.push((l.theta_forecast, params.theta_forecast));
        pairs.push((l.backcast, params.backcast));
        pairs.push((l.forecast, params.forecast));
        for (d, (w, b)) in pairs {
            for (idx, t) in [(d.weight, w), (d.bias, b)] {
                let name = &self.store.names[idx];
                if self.store.tensors[idx].shape() != t.shape() {
                    return Err(Error::ShapeMismatch {
                        op: "set_block",
                        expected: format!("{name} {:?}", self.store.tensors[idx].shape()),
                        found: format!("{:?}", t.shape()),
                    });
                }
                self.store.tensors[idx] = t;
            }
        }
        Ok(())
    }

    /// Overwrites a stack's conv kernels (0-based stack index).
    pub fn set_conv_kernels(&mut self, stack: usize, kernels: Vec<Tensor>) -> Result<()> {
        let idx = self.stacks[stack].conv.clone();
        if idx.len() != kernels.len() {
            return Err(Error::InvalidConfig("conv layer count mismatch".into()));
        }
        for (i, k) in idx.into_iter().zip(kernels) {
            if self.store.tensors[i].shape() != k.shape() {
                return Err(Error::ShapeMismatch {
                    op: "set_conv_kernels",
                    expected: format!("{:?}", self.store.tensors[i].shape()),
                    found: format!("{:?}", k.shape()),
                });
            }
            self.store.tensors[i] = k;
        }
        Ok(())
    }
}
