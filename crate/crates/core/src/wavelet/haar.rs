//! Dyadic piecewise-constant projection used as an approximation oracle.
//!
//! Samples are taken to sit at the cell midpoints `(i + 0.5) / n` of `[0, 1]`, so
//! integrals over `[0, 1]` are evaluated with the midpoint rule.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HaarProjection {
    resolution: u32,
    knots: Vec<f64>,
    theta: Vec<f64>,
}

fn interval_of(i: usize, n: usize, cells: usize) -> usize {
    // Exact integer form of floor(tau * cells) for tau = (i + 0.5) / n.
    (((2 * i + 1) * cells) / (2 * n)).min(cells - 1)
}

/// Projects uniformly sampled `f` onto indicators of the `2^w` dyadic intervals.
/// Each coefficient is the mean of the samples falling in its interval.
pub fn haar_project(samples: &[f64], w: u32) -> Result<HaarProjection> {
    let cells = 1usize.checked_shl(w).filter(|c| *c > 0);
    let cells = match cells {
        Some(c) if c <= samples.len() => c,
        _ => {
            return Err(Error::ResolutionTooFine {
                resolution: w,
                samples: samples.len(),
            })
        }
    };
    let n = samples.len();
    let mut sums = vec![0.0; cells];
    let mut counts = vec![0usize; cells];
    for (i, v) in samples.iter().enumerate() {
        let h = interval_of(i, n, cells);
        sums[h] += v;
        counts[h] += 1;
    }
    let theta = sums
        .iter()
        .zip(&counts)
        .map(|(s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
        .collect();
    let knots = (0..=cells).map(|h| h as f64 / cells as f64).collect();
    Ok(HaarProjection {
        resolution: w,
        knots,
        theta,
    })
}

impl HaarProjection {
    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// Interval edges `0 = k_0 < k_1 < ... < k_{2^w} = 1`.
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Number of coefficients, `2^w`.
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.knots.windows(2).map(|w| (w[0], w[1]))
    }

    /// Value of the piecewise-constant approximation at `tau` in `[0, 1]`.
    pub fn evaluate(&self, tau: f64) -> f64 {
        let cells = self.theta.len();
        let h = ((tau * cells as f64).floor() as isize).clamp(0, cells as isize - 1);
        self.theta[h as usize]
    }

    /// Midpoint-rule estimate of `∫ |f - f̂|` over `[0, 1]` given the samples of `f`.
    pub fn l1_error(&self, samples: &[f64]) -> f64 {
        let n = samples.len();
        let cells = self.theta.len();
        samples
            .iter()
            .enumerate()
            .map(|(i, v)| (v - self.theta[interval_of(i, n, cells)]).abs())
            .sum::<f64>()
            / n as f64
    }
}
