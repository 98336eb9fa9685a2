use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::Series;
use crate::training::{make_windows, WindowSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Train,
    Val,
    Test,
}

impl Partition {
    pub fn name(self) -> &'static str {
        match self {
            Partition::Train => "train",
            Partition::Val => "validation",
            Partition::Test => "test",
        }
    }
}

/// A series cut into consecutive train, validation and test ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub raw: Series,
    pub train: Range<usize>,
    pub val: Range<usize>,
    pub test: Range<usize>,
}

/// Chronological split: the first `floor(train * n)` samples train, the next
/// `floor(val * n)` validate, and the remainder tests. Every partition must hold at
/// least `min_len` samples.
pub fn split(series: &[f64], train: f64, val: f64, test: f64, min_len: usize) -> Result<Dataset> {
    let fracs = [train, val, test];
    if fracs.iter().any(|f| !(0.0..=1.0).contains(f)) || (train + val + test - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "split fractions must be in [0, 1] and sum to 1, got {train}, {val}, {test}"
        )));
    }
    let n = series.len();
    // The small offset keeps products like 0.7 * 10 from landing just below an integer.
    let take = |f: f64| ((f * n as f64) + 1e-9).floor() as usize;
    let train_end = take(train).min(n);
    let val_end = (train_end + take(val)).min(n);
    let ds = Dataset {
        raw: Series::from(series),
        train: 0..train_end,
        val: train_end..val_end,
        test: val_end..n,
    };
    for p in [Partition::Train, Partition::Val, Partition::Test] {
        let len = ds.range(p).len();
        if len < min_len.max(1) {
            return Err(Error::PartitionTooShort {
                partition: p.name(),
                len,
                required: min_len.max(1),
            });
        }
    }
    Ok(ds)
}

impl Dataset {
    pub fn range(&self, p: Partition) -> Range<usize> {
        match p {
            Partition::Train => self.train.clone(),
            Partition::Val => self.val.clone(),
            Partition::Test => self.test.clone(),
        }
    }

    pub fn part(&self, p: Partition) -> &[f64] {
        &self.raw[self.range(p)]
    }

    /// Windows lying entirely inside partition `p` of `values` (raw or scaled).
    pub fn windows(&self, values: &[f64], p: Partition, lookback: usize, horizon: usize, stride: usize) -> Result<WindowSet> {
        let r = self.range(p);
        make_windows(&values[r.clone()], lookback, horizon, stride).map_err(|e| match e {
            Error::SeriesTooShort { len, required } => Error::PartitionTooShort {
                partition: p.name(),
                len,
                required,
            },
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hundred_samples() {
        let s = vec![0.0; 100];
        let d = split(&s, 0.7, 0.1, 0.2, 1).unwrap();
        assert_eq!((d.train, d.val, d.test), (0..70, 70..80, 80..100));
    }

    #[test]
    fn too_short() {
        let s = vec![0.0; 10];
        assert!(matches!(split(&s, 0.7, 0.1, 0.2, 20), Err(Error::PartitionTooShort { .. })));
        assert!(split(&s, 0.7, 0.2, 0.2, 1).is_err());
    }

    #[test]
    fn floors_and_remainder() {
        for n in 10..=30usize {
            let d = split(&vec![0.0; n], 0.7, 0.1, 0.2, 1).unwrap();
            assert_eq!(d.train.len(), (7 * n) / 10);
            assert_eq!(d.val.len(), n / 10);
            assert_eq!(d.train.start, 0);
            assert_eq!(d.train.end, d.val.start);
            assert_eq!(d.val.end, d.test.start);
            assert_eq!(d.test.end, n);
        }
    }

    #[test]
    fn partition_windows() {
        let s: Vec<f64> = (0..100).map(f64::from).collect();
        let d = split(&s, 0.7, 0.1, 0.2, 1).unwrap();
        let w = d.windows(&s, Partition::Test, 10, 5, 1).unwrap();
        assert_eq!(w.len(), 6);
        assert_eq!(w.input(0)[0], 80.0);
        assert!(matches!(
            d.windows(&s, Partition::Val, 10, 5, 1),
            Err(Error::PartitionTooShort { partition: "validation", .. })
        ));
    }
}
