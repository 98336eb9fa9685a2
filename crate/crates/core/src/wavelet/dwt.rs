use serde::{Deserialize, Serialize};

use super::filters::{filter_bank, FilterPair, WaveletKind};
use crate::error::{Error, Result};
use crate::series::{check_finite, Series};

/// How the signal is extended past its ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Circular extension. The transform is orthogonal and reconstruction is exact.
    #[default]
    Periodic,
    /// Half-sample mirror extension. Synthesis is the adjoint of analysis, so
    /// reconstruction is only exact for Haar on even lengths.
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Approx,
    Detail,
}

/// Half-rate coefficients produced at one decomposition level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCoeffs {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
    /// Length of the low-pass sequence this level was computed from.
    pub input_len: usize,
}

/// Multilevel decomposition with every branch reconstructed to the original length.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid {
    kind: WaveletKind,
    boundary: Boundary,
    original: Series,
    approx: Vec<Series>,
    detail: Vec<Series>,
    raw_coeffs: Vec<LevelCoeffs>,
}

fn extend(index: isize, n: usize, boundary: Boundary) -> usize {
    let n = n as isize;
    match boundary {
        Boundary::Periodic => index.rem_euclid(n) as usize,
        Boundary::Symmetric => {
            let m = index.rem_euclid(2 * n);
            (if m < n { m } else { 2 * n - 1 - m }) as usize
        }
    }
}

/// Signal padded to even length by one sample following the boundary rule.
fn pad_even(signal: &[f64], boundary: Boundary) -> Vec<f64> {
    let mut padded = signal.to_vec();
    if signal.len() % 2 == 1 {
        let extra = match boundary {
            Boundary::Periodic => signal[0],
            Boundary::Symmetric => signal[signal.len() - 1],
        };
        padded.push(extra);
    }
    padded
}

fn offset(filters: &FilterPair) -> isize {
    filters.len() as isize / 2 - 1
}

/// One analysis level: filter with both branches and keep every other output.
///
/// Output `j` is `sum_k f[k] * x[2j + k - (K/2 - 1)]` over the extended signal, so
/// Haar pairs samples `(x[2j], x[2j+1])`.
pub fn analysis_step(signal: &[f64], filters: &FilterPair, boundary: Boundary) -> (Vec<f64>, Vec<f64>) {
    let padded = pad_even(signal, boundary);
    let n = padded.len();
    let half = n / 2;
    let shift = offset(filters);
    let mut low = vec![0.0; half];
    let mut high = vec![0.0; half];
    for j in 0..half {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for (k, (l, h)) in filters.low().iter().zip(filters.high()).enumerate() {
            let v = padded[extend(2 * j as isize + k as isize - shift, n, boundary)];
            lo += l * v;
            hi += h * v;
        }
        low[j] = lo;
        high[j] = hi;
    }
    (low, high)
}

/// Adjoint of [`analysis_step`]: upsample each branch and filter, truncated to `out_len`.
/// A missing branch is treated as all zeros.
pub fn synthesis_step(
    low: Option<&[f64]>,
    high: Option<&[f64]>,
    filters: &FilterPair,
    out_len: usize,
    boundary: Boundary,
) -> Vec<f64> {
    let n = out_len + out_len % 2;
    let shift = offset(filters);
    let mut out = vec![0.0; n];
    let mut scatter = |coeffs: &[f64], taps: &[f64]| {
        debug_assert_eq!(coeffs.len(), n / 2);
        for (j, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for (k, &t) in taps.iter().enumerate() {
                out[extend(2 * j as isize + k as isize - shift, n, boundary)] += t * c;
            }
        }
    };
    if let Some(low) = low {
        scatter(low, filters.low());
    }
    if let Some(high) = high {
        scatter(high, filters.high());
    }
    out.truncate(out_len);
    out
}

fn reconstruct(
    coeffs: &[LevelCoeffs],
    filters: &FilterPair,
    boundary: Boundary,
    level: usize,
    branch: Branch,
) -> Series {
    let top = &coeffs[level - 1];
    let mut signal = match branch {
        Branch::Approx => synthesis_step(Some(&top.low), None, filters, top.input_len, boundary),
        Branch::Detail => synthesis_step(None, Some(&top.high), filters, top.input_len, boundary),
    };
    for lower in coeffs[..level - 1].iter().rev() {
        signal = synthesis_step(Some(&signal), None, filters, lower.input_len, boundary);
    }
    Series::new(signal)
}

/// Multilevel discrete wavelet decomposition with periodic boundaries.
pub fn mdwd(x: &[f64], n_levels: usize, kind: WaveletKind) -> Result<WaveletPyramid> {
    mdwd_with_boundary(x, n_levels, kind, Boundary::Periodic)
}

pub fn mdwd_with_boundary(
    x: &[f64],
    n_levels: usize,
    kind: WaveletKind,
    boundary: Boundary,
) -> Result<WaveletPyramid> {
    if n_levels == 0 {
        return Err(Error::InvalidConfig("wavelet decomposition needs at least one level".into()));
    }
    let required = 1usize
        .checked_shl(n_levels as u32)
        .filter(|r| *r > 0)
        .unwrap_or(usize::MAX);
    if x.len() < required {
        return Err(Error::SeriesTooShort {
            len: x.len(),
            required,
        });
    }
    check_finite(x)?;

    let filters = filter_bank(kind);
    let mut raw_coeffs = Vec::with_capacity(n_levels);
    let mut current = x.to_vec();
    for _ in 0..n_levels {
        let (low, high) = analysis_step(&current, &filters, boundary);
        let input_len = current.len();
        current = low.clone();
        raw_coeffs.push(LevelCoeffs {
            low,
            high,
            input_len,
        });
    }

    let approx = (1..=n_levels)
        .map(|l| reconstruct(&raw_coeffs, &filters, boundary, l, Branch::Approx))
        .collect();
    let detail = (1..=n_levels)
        .map(|l| reconstruct(&raw_coeffs, &filters, boundary, l, Branch::Detail))
        .collect();

    Ok(WaveletPyramid {
        kind,
        boundary,
        original: Series::from(x),
        approx,
        detail,
        raw_coeffs,
    })
}

/// Rebuilds one branch at `level` back to the original length.
pub fn reconstruct_branch(pyramid: &WaveletPyramid, level: usize, branch: Branch) -> Result<Series> {
    pyramid.check_level(level)?;
    Ok(reconstruct(
        &pyramid.raw_coeffs,
        &filter_bank(pyramid.kind),
        pyramid.boundary,
        level,
        branch,
    ))
}

impl WaveletPyramid {
    fn check_level(&self, level: usize) -> Result<()> {
        if level == 0 || level > self.levels() {
            return Err(Error::LevelOutOfRange {
                level,
                levels: self.levels(),
            });
        }
        Ok(())
    }

    pub fn levels(&self) -> usize {
        self.raw_coeffs.len()
    }

    pub fn kind(&self) -> WaveletKind {
        self.kind
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn original(&self) -> &Series {
        &self.original
    }

    /// Low-frequency branch `x^l(level)`, 1-based.
    pub fn approx(&self, level: usize) -> Result<&Series> {
        self.check_level(level)?;
        Ok(&self.approx[level - 1])
    }

    /// High-frequency branch `x^h(level)`, 1-based.
    pub fn detail(&self, level: usize) -> Result<&Series> {
        self.check_level(level)?;
        Ok(&self.detail[level - 1])
    }

    pub fn branch(&self, level: usize, branch: Branch) -> Result<&Series> {
        match branch {
            Branch::Approx => self.approx(level),
            Branch::Detail => self.detail(level),
        }
    }

    pub fn raw_coeffs(&self) -> &[LevelCoeffs] {
        &self.raw_coeffs
    }

    /// `approx[levels] + sum(detail)`, which equals the original for periodic boundaries.
    pub fn reconstruction(&self) -> Series {
        let mut sum = self.approx[self.levels() - 1].clone();
        for d in &self.detail {
            for (s, v) in sum.iter_mut().zip(d.iter()) {
                *s += v;
            }
        }
        sum
    }

    /// Max-abs difference between [`Self::reconstruction`] and the original.
    pub fn reconstruction_error(&self) -> f64 {
        self.reconstruction()
            .iter()
            .zip(self.original.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
