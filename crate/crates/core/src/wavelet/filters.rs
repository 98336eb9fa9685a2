use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

/// Supported orthogonal wavelet families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum WaveletKind {
    /// Haar, also known as `db1`.
    #[default]
    Haar,
    Db2,
    Sym4,
}

impl WaveletKind {
    pub const ALL: [WaveletKind; 3] = [WaveletKind::Haar, WaveletKind::Db2, WaveletKind::Sym4];

    pub fn name(self) -> &'static str {
        match self {
            WaveletKind::Haar => "haar",
            WaveletKind::Db2 => "db2",
            WaveletKind::Sym4 => "sym4",
        }
    }
}

/// Orthonormal low/high-pass analysis filters.
///
/// Coefficients are stored in reconstruction order (`rec_lo`/`rec_hi` in PyWavelets
/// terms); the analysis step correlates the signal with them.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterPair {
    kind: WaveletKind,
    low: Vec<f64>,
    high: Vec<f64>,
}

const ORTHO_TOL: f64 = 1e-12;

// Least-asymmetric Daubechies filter with 4 vanishing moments, from a 40-digit
// spectral factorisation.
const SYM4_LOW: [f64; 8] = [
    0.032_223_100_604_051_467_87,
    -0.012_603_967_262_031_303_75,
    -0.099_219_543_576_633_532_59,
    0.297_857_795_605_306_051_40,
    0.803_738_751_805_132_080_88,
    0.497_618_667_632_774_989_98,
    -0.029_635_527_646_002_491_76,
    -0.075_765_714_789_502_213_23,
];

impl FilterPair {
    fn from_low(kind: WaveletKind, low: Vec<f64>) -> Self {
        let n = low.len();
        let high = (0..n)
            .map(|k| if k % 2 == 0 { low[n - 1 - k] } else { -low[n - 1 - k] })
            .collect();
        FilterPair { kind, low, high }
    }

    fn build(kind: WaveletKind) -> Self {
        let low = match kind {
            WaveletKind::Haar => vec![std::f64::consts::FRAC_1_SQRT_2; 2],
            WaveletKind::Db2 => {
                let s3 = 3f64.sqrt();
                let d = 4.0 * std::f64::consts::SQRT_2;
                vec![(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d]
            }
            WaveletKind::Sym4 => SYM4_LOW.to_vec(),
        };
        FilterPair::from_low(kind, low)
    }

    pub fn kind(&self) -> WaveletKind {
        self.kind
    }

    pub fn low(&self) -> &[f64] {
        &self.low
    }

    pub fn high(&self) -> &[f64] {
        &self.high
    }

    /// Filter length `K`.
    pub fn len(&self) -> usize {
        self.low.len()
    }

    pub fn is_empty(&self) -> bool {
        self.low.is_empty()
    }

    /// Checks unit norm, the quadrature-mirror relation and orthogonality of the pair.
    pub fn validate(&self) -> std::result::Result<(), String> {
        let n = self.low.len();
        if n == 0 || n != self.high.len() || n % 2 != 0 || n > 8 {
            return Err(format!("{}: bad filter length {n}", self.kind.name()));
        }
        let norm_l: f64 = self.low.iter().map(|v| v * v).sum();
        let norm_h: f64 = self.high.iter().map(|v| v * v).sum();
        if (norm_l - 1.0).abs() > ORTHO_TOL || (norm_h - 1.0).abs() > ORTHO_TOL {
            return Err(format!("{}: filters are not unit norm", self.kind.name()));
        }
        for k in 0..n {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            if (self.high[k] - sign * self.low[n - 1 - k]).abs() > ORTHO_TOL {
                return Err(format!("{}: mirror relation fails at {k}", self.kind.name()));
            }
        }
        // Double-shift orthogonality of the low-pass filter.
        for shift in (2..n).step_by(2) {
            let dot: f64 = (0..n - shift).map(|k| self.low[k] * self.low[k + shift]).sum();
            if dot.abs() > ORTHO_TOL {
                return Err(format!("{}: not orthogonal at shift {shift}", self.kind.name()));
            }
        }
        let cross: f64 = self.low.iter().zip(&self.high).map(|(l, h)| l * h).sum();
        if cross.abs() > ORTHO_TOL {
            return Err(format!("{}: low and high are not orthogonal", self.kind.name()));
        }
        Ok(())
    }
}

/// Returns the validated filter pair for `kind`.
///
/// # Panics
///
/// Panics if the built-in coefficients fail validation, which would be a build defect.
pub fn filter_bank(kind: WaveletKind) -> FilterPair {
    static BANKS: OnceLock<Vec<FilterPair>> = OnceLock::new();
    let banks = BANKS.get_or_init(|| {
        WaveletKind::ALL
            .iter()
            .map(|&k| {
                let pair = FilterPair::build(k);
                if let Err(e) = pair.validate() {
                    panic!("built-in wavelet coefficients are invalid: {e}");
                }
                pair
            })
            .collect()
    });
    banks[WaveletKind::ALL.iter().position(|&k| k == kind).unwrap()].clone()
}
