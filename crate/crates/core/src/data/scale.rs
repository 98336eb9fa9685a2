use serde::{Deserialize, Serialize};

use super::split::Dataset;
use crate::error::{Error, Result};
use crate::series::Series;

/// Mean and population standard deviation of the training range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: f64,
    pub std: f64,
}

impl Scaler {
    pub fn fit(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        if !(std > 1e-12 * mean.abs().max(1.0)) {
            return Err(Error::ZeroVariance);
        }
        Ok(Scaler { mean, std })
    }

    pub fn apply(&self, values: &[f64]) -> Series {
        values.iter().map(|v| (v - self.mean) / self.std).collect()
    }

    pub fn invert(&self, values: &[f64]) -> Series {
        values.iter().map(|v| v * self.std + self.mean).collect()
    }
}

/// The whole series scaled with statistics from the training range only.
pub fn standardize(ds: &Dataset) -> Result<(Series, Scaler)> {
    let scaler = Scaler::fit(&ds.raw[ds.train.clone()])?;
    Ok((scaler.apply(&ds.raw), scaler))
}

pub fn destandardize(values: &[f64], scaler: &Scaler) -> Series {
    scaler.invert(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::split;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_train_rejected() {
        let mut s = vec![3.0; 70];
        s.extend((0..30).map(f64::from));
        let d = split(&s, 0.7, 0.1, 0.2, 1).unwrap();
        assert!(matches!(standardize(&d), Err(Error::ZeroVariance)));
    }

    #[test]
    fn round_trip_and_moments() {
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let loc = rng.random_range(-100.0..100.0);
            let s: Vec<f64> = (0..50).map(|_| loc + rng.random_range(-5.0..5.0)).collect();
            let d = split(&s, 0.7, 0.1, 0.2, 1).unwrap();
            let (z, sc) = standardize(&d).unwrap();
            let back = destandardize(&z, &sc);
            assert!(back.iter().zip(&s).all(|(a, b)| (a - b).abs() < 1e-10));
            let tr = &z[d.train.clone()];
            let m = tr.iter().sum::<f64>() / tr.len() as f64;
            let v = tr.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / tr.len() as f64;
            assert!(m.abs() < 1e-12 && (v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn depends_on_train_only() {
        let s: Vec<f64> = (0..100).map(|t| (t as f64).sin()).collect();
        let mut t = s.clone();
        t[90] = 1e6;
        let a = standardize(&split(&s, 0.7, 0.1, 0.2, 1).unwrap()).unwrap().1;
        let b = standardize(&split(&t, 0.7, 0.1, 0.2, 1).unwrap()).unwrap().1;
        assert_eq!(a, b);
    }

    #[test]
    fn standard_input_nearly_unchanged() {
        let s: Vec<f64> = (0..100).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let d = split(&s, 0.7, 0.1, 0.2, 1).unwrap();
        let (z, _) = standardize(&d).unwrap();
        assert!(z.iter().zip(&s).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}
