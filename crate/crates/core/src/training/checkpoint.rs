use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelParams, ParamStore};
use crate::nn::Tensor;

pub const FORMAT_VERSION: u32 = 1;

/// Saved parameters with the metadata needed to trust them.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config_hash: String,
    pub epoch: usize,
    pub val_loss: f64,
    pub params: ParamStore,
}

impl Checkpoint {
    pub fn new(cfg: &ModelConfig, params: &ModelParams, epoch: usize, val_loss: f64) -> Self {
        Checkpoint {
            config_hash: cfg.architecture_hash(),
            epoch,
            val_loss,
            params: params.store().clone(),
        }
    }

    /// Text form: `#key=value` header lines, then one `name,shape,values` row per tensor.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "#format_version={FORMAT_VERSION}");
        let _ = writeln!(s, "#config_hash={}", self.config_hash);
        let _ = writeln!(s, "#epoch={}", self.epoch);
        let _ = writeln!(s, "#val_loss={:e}", self.val_loss);
        for (name, t) in self.params.iter() {
            let shape: Vec<String> = t.shape().iter().map(|d| d.to_string()).collect();
            let values: Vec<String> = t.data().iter().map(|v| format!("{v:e}")).collect();
            let _ = writeln!(s, "{name},{},{}", shape.join("x"), values.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: String| Error::Checkpoint(m);
        let mut header = std::collections::HashMap::new();
        let mut params = ParamStore::new();
        for (n, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            if let Some(kv) = line.strip_prefix('#') {
                let (k, v) = kv.split_once('=').ok_or_else(|| bad(format!("line {}: bad header", n + 1)))?;
                header.insert(k.to_string(), v.to_string());
                continue;
            }
            let mut parts = line.splitn(3, ',');
            let (name, shape, values) = match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), Some(c)) => (a, b, c),
                _ => return Err(bad(format!("line {}: expected name,shape,values", n + 1))),
            };
            let shape: Vec<usize> = if shape.is_empty() {
                Vec::new()
            } else {
                shape
                    .split('x')
                    .map(|d| d.parse().map_err(|_| bad(format!("line {}: bad shape `{shape}`", n + 1))))
                    .collect::<Result<_>>()?
            };
            let data: Vec<f64> = values
                .split_whitespace()
                .map(|v| v.parse().map_err(|_| bad(format!("line {}: bad value `{v}`", n + 1))))
                .collect::<Result<_>>()?;
            let t = Tensor::new(shape, data).map_err(|e| bad(format!("line {}: {e}", n + 1)))?;
            params.push(name, t);
        }
        let get = |k: &str| header.get(k).ok_or_else(|| bad(format!("missing header `{k}`")));
        let version: u32 = get("format_version")?.parse().map_err(|_| bad("bad format_version".into()))?;
        if version != FORMAT_VERSION {
            return Err(bad(format!("unsupported format version {version}")));
        }
        Ok(Checkpoint {
            config_hash: get("config_hash")?.clone(),
            epoch: get("epoch")?.parse().map_err(|_| bad("bad epoch".into()))?,
            val_loss: get("val_loss")?.parse().map_err(|_| bad("bad val_loss".into()))?,
            params,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    /// Parameters for `cfg`, refusing checkpoints written for another architecture.
    pub fn into_params(self, cfg: &ModelConfig) -> Result<ModelParams> {
        let expected = cfg.architecture_hash();
        if self.config_hash != expected {
            return Err(Error::ConfigMismatch {
                expected,
                found: self.config_hash,
            });
        }
        ModelParams::from_store(cfg, self.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ConvVariant, PerStack};

    fn cfg() -> ModelConfig {
        ModelConfig {
            n_stacks: 2,
            blocks_per_stack: 1,
            lookback: 16,
            horizon: 2,
            hidden_depth: 1,
            hidden_width: 3,
            conv_variant: PerStack::All(ConvVariant::Cnn),
            kernel_sizes: Some(vec![3, 3]),
            seed: 5,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn text_round_trip_is_exact() {
        let c = cfg();
        let mut p = ModelParams::init(&c).unwrap();
        p.store_mut().tensors_mut()[3].data_mut()[0] = 1.0 / 3.0 + 1e-300;
        let ck = Checkpoint::new(&c, &p, 7, 0.125);
        let back = Checkpoint::from_text(&ck.to_text()).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.into_params(&c).unwrap(), p);
    }

    #[test]
    fn mismatched_architecture_rejected() {
        let c = cfg();
        let p = ModelParams::init(&c).unwrap();
        let ck = Checkpoint::new(&c, &p, 1, 0.0);
        let other = ModelConfig { alpha: 0.1, ..c };
        assert!(matches!(ck.into_params(&other), Err(Error::ConfigMismatch { .. })));
    }

    #[test]
    fn garbage_rejected() {
        assert!(Checkpoint::from_text("#format_version=1\nx,2,1.0\n").is_err());
        assert!(Checkpoint::from_text("x,1,1.0\n").is_err());
    }
}
