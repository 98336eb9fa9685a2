use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use weits_core::data::SyntheticSpec;
use weits_core::ensemble::EnsembleConfig;
use weits_core::model::{ConvVariant, ModelConfig};
use weits_core::training::TrainConfig;
use weits_core::wavelet::{Boundary, WaveletKind};

use crate::error::CliError;

pub const SPEC_VERSION: u32 = 1;

/// The generated multi-frequency benchmark series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkData {
    pub length: usize,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// CSV file, resolved against the config file's directory.
    pub path: Option<PathBuf>,
    pub column: String,
    pub time_column: Option<String>,
    pub synthetic: Option<SyntheticSpec>,
    pub benchmark: Option<BenchmarkData>,
    /// Train, validation and test shares.
    pub fractions: [f64; 3],
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            path: None,
            column: "value".into(),
            time_column: None,
            synthetic: None,
            benchmark: None,
            fractions: [0.7, 0.1, 0.2],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct DecomposeConfig {
    /// Defaults to the model's `n_stacks - 1`.
    pub levels: Option<usize>,
    /// Defaults to the model's wavelet.
    pub wavelet: Option<WaveletKind>,
    pub boundary: Option<Boundary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastConfig {
    /// First sample of the input window; defaults to the last `lookback` samples.
    pub start: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblateConfig {
    pub repetitions: usize,
    pub alpha: Vec<f64>,
    pub noise: Vec<f64>,
    pub stacks: Vec<usize>,
    pub conv: Vec<ConvVariant>,
    pub ensemble_size: Vec<usize>,
}

impl Default for AblateConfig {
    fn default() -> Self {
        AblateConfig {
            repetitions: 3,
            alpha: vec![0.0, 0.4, 1.0],
            noise: vec![0.025, 0.05, 0.075],
            stacks: vec![2, 3, 4, 6],
            conv: ConvVariant::ALL.to_vec(),
            ensemble_size: vec![1, 3, 5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub spec_version: u32,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    /// Absent means a single model.
    #[serde(default)]
    pub ensemble: Option<EnsembleConfig>,
    #[serde(default)]
    pub decompose: DecomposeConfig,
    #[serde(default)]
    pub forecast: ForecastConfig,
    #[serde(default)]
    pub ablate: AblateConfig,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if let Some(p) = &cfg.data.path {
            if p.is_relative() {
                let base = path.parent().unwrap_or(Path::new(""));
                cfg.data.path = Some(base.join(p));
            }
        }
        Ok(cfg)
    }

    /// One seed for model init, training, and the first ensemble member.
    pub fn set_seed(&mut self, seed: u64) {
        self.model.seed = seed;
        self.train.seed = seed;
        if let Some(e) = &mut self.ensemble {
            e.base_seed = seed;
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.spec_version != SPEC_VERSION {
            return Err(CliError::Config(format!(
                "spec_version {} is not supported (expected {SPEC_VERSION})",
                self.spec_version
            )));
        }
        let sources = [
            self.data.path.is_some(),
            self.data.synthetic.is_some(),
            self.data.benchmark.is_some(),
        ];
        if sources.iter().filter(|s| **s).count() != 1 {
            return Err(CliError::Config(
                "[data] needs exactly one of `path`, `synthetic` or `benchmark`".into(),
            ));
        }
        if let Some(s) = &self.data.synthetic {
            s.validate()?;
        }
        if let Some(b) = &self.data.benchmark {
            if b.length == 0 || !(0.0..1.0).contains(&b.noise) {
                return Err(CliError::Config("benchmark needs length >= 1 and noise in [0, 1)".into()));
            }
        }
        self.model.validate()?;
        self.train.validate()?;
        if let Some(e) = &self.ensemble {
            e.validate()?;
        }
        if self.ablate.repetitions == 0 {
            return Err(CliError::Config("ablate.repetitions must be >= 1".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "spec_version = 1\n[data]\nbenchmark = { length = 400 }\n";

    #[test]
    fn defaults_fill_in() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.model, ModelConfig::default());
        assert_eq!(cfg.train.learning_rate, 1e-4);
        assert!(cfg.ensemble.is_none());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse(&format!("{MINIMAL}[model]\nalhpa = 0.3\n")).is_err());
        assert!(RunConfig::parse(&format!("bogus = 1\n{MINIMAL}")).is_err());
    }

    #[test]
    fn resolved_config_round_trips() {
        let mut cfg = RunConfig::parse(&format!(
            "{MINIMAL}[model]\nconv_variant = [\"dcn\", \"none\", \"maxpool\", \"cnn\"]\nkernel_sizes = [7, 5, 3, 3]\n[ensemble]\nsize = 2\n"
        ))
        .unwrap();
        cfg.set_seed(42);
        let back = RunConfig::parse(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.ensemble.unwrap().member_seeds(), vec![42, 43]);
    }

    #[test]
    fn validation() {
        let mut cfg = RunConfig::parse(MINIMAL).unwrap();
        cfg.spec_version = 2;
        assert!(cfg.validate().is_err());
        let cfg = RunConfig::parse("spec_version = 1\n").unwrap();
        assert!(cfg.validate().is_err());
        let cfg = RunConfig::parse(&format!("{MINIMAL}[model]\nalpha = 2.0\n")).unwrap();
        assert!(cfg.validate().is_err());
    }
}
