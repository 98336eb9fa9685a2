use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::Series;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Component {
    Sine {
        amplitude: f64,
        period: f64,
        #[serde(default)]
        phase: f64,
    },
    Trend {
        slope: f64,
        #[serde(default)]
        intercept: f64,
    },
    Step {
        at: usize,
        height: f64,
    },
    /// Multiplies the running sum by `1 + u`, `u` uniform in `[-level, level]`.
    Noise { level: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub length: usize,
    #[serde(default)]
    pub seed: u64,
    pub components: Vec<Component>,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(Error::InvalidConfig("synthetic length must be >= 1".into()));
        }
        for c in &self.components {
            match c {
                Component::Sine { period, .. } if !(*period >= 2.0) => {
                    return Err(Error::InvalidConfig(format!("sine period must be >= 2, got {period}")));
                }
                Component::Noise { level } if !(*level >= 0.0 && *level < 1.0) => {
                    return Err(Error::InvalidConfig(format!("noise level must lie in [0, 1), got {level}")));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Same spec with every noise component removed.
    pub fn noiseless(&self) -> SyntheticSpec {
        SyntheticSpec {
            components: self
                .components
                .iter()
                .filter(|c| !matches!(c, Component::Noise { .. }))
                .cloned()
                .collect(),
            ..self.clone()
        }
    }
}

/// Additive components in order; each noise component scales everything before it.
pub fn synthesize(spec: &SyntheticSpec) -> Result<Series> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut x = vec![0.0; spec.length];
    for c in &spec.components {
        match *c {
            Component::Sine {
                amplitude,
                period,
                phase,
            } => {
                for (t, v) in x.iter_mut().enumerate() {
                    *v += amplitude * (TAU * t as f64 / period + phase).sin();
                }
            }
            Component::Trend { slope, intercept } => {
                for (t, v) in x.iter_mut().enumerate() {
                    *v += intercept + slope * t as f64;
                }
            }
            Component::Step { at, height } => {
                for v in x.iter_mut().skip(at) {
                    *v += height;
                }
            }
            Component::Noise { level } => scale_by_noise(&mut x, level, &mut rng),
        }
    }
    Ok(Series::new(x))
}

fn scale_by_noise(x: &mut [f64], level: f64, rng: &mut ChaCha8Rng) {
    for v in x.iter_mut() {
        let eta = if level > 0.0 { rng.random_range(-level..=level) } else { 0.0 };
        *v *= 1.0 + eta;
    }
}

/// `x_t * (1 + u_t)` with `u_t` uniform in `[-level, level]`, drawn from `seed`.
pub fn multiplicative_noise(x: &[f64], level: f64, seed: u64) -> Result<Series> {
    if !(0.0..1.0).contains(&level) {
        return Err(Error::InvalidConfig(format!("noise level must lie in [0, 1), got {level}")));
    }
    let mut out = x.to_vec();
    scale_by_noise(&mut out, level, &mut ChaCha8Rng::seed_from_u64(seed));
    Ok(Series::new(out))
}

/// The multi-frequency benchmark: a slow cycle, a medium cycle, a fast cycle and a
/// mild trend, offset away from zero so multiplicative noise acts everywhere.
pub fn benchmark_spec(length: usize, noise: f64, seed: u64) -> SyntheticSpec {
    let mut components = vec![
        Component::Trend {
            slope: 0.0,
            intercept: 2.0,
        },
        Component::Sine {
            amplitude: 1.0,
            period: 64.0,
            phase: 0.0,
        },
        Component::Sine {
            amplitude: 0.5,
            period: 16.0,
            phase: 0.7,
        },
        Component::Sine {
            amplitude: 0.3,
            period: 4.0,
            phase: 0.3,
        },
    ];
    if noise > 0.0 {
        components.push(Component::Noise { level: noise });
    }
    SyntheticSpec {
        length,
        seed,
        components,
    }
}
