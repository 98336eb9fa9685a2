use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::wavelet::{Boundary, WaveletKind};

/// Multi-resolution front end applied to each stack's input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvVariant {
    /// Stacked causal convolutions with growing dilation.
    Dcn,
    /// Stacked causal convolutions, dilation 1.
    Cnn,
    #[serde(rename = "maxpool")]
    MaxPool,
    #[serde(rename = "avgpool")]
    AvgPool,
    None,
}

impl ConvVariant {
    pub const ALL: [ConvVariant; 5] = [
        ConvVariant::Dcn,
        ConvVariant::Cnn,
        ConvVariant::MaxPool,
        ConvVariant::AvgPool,
        ConvVariant::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConvVariant::Dcn => "dcn",
            ConvVariant::Cnn => "cnn",
            ConvVariant::MaxPool => "maxpool",
            ConvVariant::AvgPool => "avgpool",
            ConvVariant::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        ConvVariant::ALL.into_iter().find(|v| v.name() == s)
    }
}

/// One value for every stack, or one per stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerStack<T> {
    All(T),
    Each(Vec<T>),
}

impl<T: Copy> PerStack<T> {
    fn get(&self, i: usize) -> Option<T> {
        match self {
            PerStack::All(v) => Some(*v),
            PerStack::Each(vs) => vs.get(i).copied(),
        }
    }
}

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub n_stacks: usize,
    pub blocks_per_stack: usize,
    /// Share of the wavelet branch in each stack input, the same for every stack.
    pub alpha: f64,
    pub lookback: usize,
    pub horizon: usize,
    pub hidden_depth: usize,
    pub hidden_width: usize,
    pub conv_variant: PerStack<ConvVariant>,
    /// Per-stack kernel sizes, nonincreasing. Defaults to `max(3, 2(N-i)+1)`.
    pub kernel_sizes: Option<Vec<usize>>,
    /// Dilation per conv layer. Defaults to `1,2,4` below lookback 120, else `1,2,4,8`.
    pub dilations: Option<Vec<usize>>,
    pub wavelet: WaveletKind,
    pub boundary: Boundary,
    /// Defaults to the conv output length.
    pub theta_backcast_dim: Option<usize>,
    /// Defaults to the horizon.
    pub theta_forecast_dim: Option<usize>,
    pub dropout: f64,
    pub seed: u64,
    /// Keep conv kernels at their initial value during training.
    pub freeze_conv: bool,
    /// Run the plain doubly-residual network with no wavelet pyramid at all.
    pub detach_wavelet: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            n_stacks: 4,
            blocks_per_stack: 5,
            alpha: 0.4,
            lookback: 720,
            horizon: 24,
            hidden_depth: 3,
            hidden_width: 16,
            conv_variant: PerStack::All(ConvVariant::Dcn),
            kernel_sizes: None,
            dilations: None,
            wavelet: WaveletKind::Haar,
            boundary: Boundary::Periodic,
            theta_backcast_dim: None,
            theta_forecast_dim: None,
            dropout: 0.1,
            seed: 0,
            freeze_conv: false,
            detach_wavelet: false,
        }
    }
}

impl ModelConfig {
    /// Decomposition depth, `N - 1`.
    pub fn wavelet_levels(&self) -> usize {
        self.n_stacks.saturating_sub(1)
    }

    /// Whether a pyramid is computed and blended into stack inputs.
    pub fn uses_wavelet(&self) -> bool {
        !self.detach_wavelet && self.wavelet_levels() > 0
    }

    /// Conv variant of stack `i` (0-based).
    pub fn conv_variant(&self, i: usize) -> ConvVariant {
        self.conv_variant.get(i).unwrap_or(ConvVariant::None)
    }

    /// Kernel size of stack `i` (0-based).
    pub fn kernel_size(&self, i: usize) -> usize {
        match &self.kernel_sizes {
            Some(ks) => ks[i],
            None => (2 * (self.n_stacks - 1 - i) + 1).max(3),
        }
    }

    pub fn dilations(&self) -> Vec<usize> {
        match &self.dilations {
            Some(d) => d.clone(),
            None if self.lookback < 120 => vec![1, 2, 4],
            None => vec![1, 2, 4, 8],
        }
    }

    /// Length of stack `i`'s input after its conv front end.
    pub fn conv_output_len(&self, i: usize) -> Option<usize> {
        let t = self.lookback;
        let k = self.kernel_size(i);
        match self.conv_variant(i) {
            ConvVariant::None => Some(t),
            ConvVariant::Dcn => {
                let span: usize = self.dilations().iter().map(|d| (k - 1) * d).sum();
                t.checked_sub(span).filter(|n| *n > 0)
            }
            ConvVariant::Cnn => {
                let span = self.dilations().len() * (k - 1);
                t.checked_sub(span).filter(|n| *n > 0)
            }
            ConvVariant::MaxPool | ConvVariant::AvgPool => Some(t / k).filter(|n| *n > 0),
        }
    }

    pub fn theta_backcast_dim(&self, conv_len: usize) -> usize {
        self.theta_backcast_dim.unwrap_or(conv_len)
    }

    pub fn theta_forecast_dim(&self) -> usize {
        self.theta_forecast_dim.unwrap_or(self.horizon)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_stacks == 0 || self.blocks_per_stack == 0 {
            return bad("n_stacks and blocks_per_stack must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha must lie in [0, 1], got {}", self.alpha));
        }
        if self.alpha > 0.0 && !self.detach_wavelet && self.n_stacks < 2 {
            return bad("alpha > 0 needs at least two stacks".into());
        }
        if self.lookback == 0 || self.horizon == 0 {
            return bad("lookback and horizon must be >= 1".into());
        }
        if self.hidden_depth == 0 || self.hidden_width == 0 {
            return bad("hidden_depth and hidden_width must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if let PerStack::Each(v) = &self.conv_variant {
            if v.len() != self.n_stacks {
                return bad(format!("conv_variant lists {} stacks, expected {}", v.len(), self.n_stacks));
            }
        }
        if let Some(ks) = &self.kernel_sizes {
            if ks.len() != self.n_stacks {
                return bad(format!("kernel_sizes lists {} stacks, expected {}", ks.len(), self.n_stacks));
            }
            if ks.contains(&0) {
                return bad("kernel sizes must be >= 1".into());
            }
            if ks.windows(2).any(|w| w[1] > w[0]) {
                return bad(format!("kernel sizes must be nonincreasing, got {ks:?}"));
            }
        }
        let dilations = self.dilations();
        if dilations.is_empty() || dilations.contains(&0) {
            return bad("dilations must be a nonempty list of values >= 1".into());
        }
        if self.uses_wavelet() && self.lookback < 1 << self.wavelet_levels().min(63) {
            return bad(format!(
                "lookback {} is too short for a {}-level decomposition",
                self.lookback,
                self.wavelet_levels()
            ));
        }
        for i in 0..self.n_stacks {
            if self.conv_output_len(i).is_none() {
                return bad(format!(
                    "stack {} conv ({}, kernel {}) leaves no samples from lookback {}",
                    i + 1,
                    self.conv_variant(i).name(),
                    self.kernel_size(i),
                    self.lookback
                ));
            }
        }
        if self.theta_backcast_dim == Some(0) || self.theta_forecast_dim == Some(0) {
            return bad("theta dimensions must be >= 1".into());
        }
        Ok(())
    }

    /// Hex digest identifying the architecture. The seed is excluded so that
    /// independently seeded members of one ensemble share a hash.
    pub fn architecture_hash(&self) -> String {
        let mut arch = self.clone();
        arch.seed = 0;
        let digest = Sha256::digest(format!("{arch:?}").as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
