use crate::error::{Error, Result};
use crate::nn::Tensor;
use crate::series::Series;

/// Contiguous `(input, target)` pairs cut from one series.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowSet {
    inputs: Vec<Series>,
    targets: Vec<Series>,
    offsets: Vec<usize>,
}

/// Every window of `lookback` inputs followed by `horizon` targets, starting at
/// offsets `0, stride, 2*stride, ...`.
pub fn make_windows(series: &[f64], lookback: usize, horizon: usize, stride: usize) -> Result<WindowSet> {
    if lookback == 0 || horizon == 0 || stride == 0 {
        return Err(Error::InvalidConfig("lookback, horizon and stride must be >= 1".into()));
    }
    let span = lookback + horizon;
    if series.len() < span {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            required: span,
        });
    }
    let count = (series.len() - span) / stride + 1;
    let mut set = WindowSet::default();
    for w in 0..count {
        let o = w * stride;
        set.inputs.push(Series::from(&series[o..o + lookback]));
        set.targets.push(Series::from(&series[o + lookback..o + span]));
        set.offsets.push(o);
    }
    Ok(set)
}

impl WindowSet {
    pub fn from_pairs(pairs: Vec<(Series, Series)>) -> Result<Self> {
        let mut set = WindowSet::default();
        for (i, (x, y)) in pairs.into_iter().enumerate() {
            if let Some(first) = set.inputs.first() {
                if first.len() != x.len() || set.targets[0].len() != y.len() {
                    return Err(Error::ShapeMismatch {
                        op: "window set",
                        expected: format!("({}, {})", first.len(), set.targets[0].len()),
                        found: format!("({}, {})", x.len(), y.len()),
                    });
                }
            }
            set.inputs.push(x);
            set.targets.push(y);
            set.offsets.push(i);
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input(&self, i: usize) -> &Series {
        &self.inputs[i]
    }

    pub fn target(&self, i: usize) -> &Series {
        &self.targets[i]
    }

    pub fn inputs(&self) -> &[Series] {
        &self.inputs
    }

    pub fn targets(&self) -> &[Series] {
        &self.targets
    }

    /// Start of each window in the source series.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Windows at `indices`, repeats allowed.
    pub fn select(&self, indices: &[usize]) -> WindowSet {
        WindowSet {
            inputs: indices.iter().map(|&i| self.inputs[i].clone()).collect(),
            targets: indices.iter().map(|&i| self.targets[i].clone()).collect(),
            offsets: indices.iter().map(|&i| self.offsets[i]).collect(),
        }
    }

    /// `[B, T]` inputs and `[B, H]` targets for the windows at `indices`.
    pub fn batch(&self, indices: &[usize]) -> Result<(Tensor, Tensor)> {
        let xs: Vec<&[f64]> = indices.iter().map(|&i| self.inputs[i].values()).collect();
        let ys: Vec<&[f64]> = indices.iter().map(|&i| self.targets[i].values()).collect();
        Ok((Tensor::from_rows(&xs)?, Tensor::from_rows(&ys)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_counts() {
        let s: Vec<f64> = (0..10).map(f64::from).collect();
        assert_eq!(make_windows(&s, 7, 3, 1).unwrap().len(), 1);
        let s: Vec<f64> = (0..12).map(f64::from).collect();
        assert_eq!(make_windows(&s, 7, 3, 1).unwrap().len(), 3);
        assert!(matches!(
            make_windows(&s, 10, 3, 1),
            Err(Error::SeriesTooShort { len: 12, required: 13 })
        ));
    }

    #[test]
    fn strided_windows_enumerated() {
        let s: Vec<f64> = (0..10).map(f64::from).collect();
        let w = make_windows(&s, 3, 2, 2).unwrap();
        assert_eq!(w.offsets(), &[0, 2, 4]);
        let targets: Vec<Vec<f64>> = w.targets().iter().map(|t| t.values().to_vec()).collect();
        assert_eq!(targets, vec![vec![3.0, 4.0], vec![5.0, 6.0], vec![7.0, 8.0]]);
        for i in 0..w.len() {
            let o = w.offsets()[i];
            assert_eq!(w.input(i).values(), &s[o..o + 3]);
        }
    }

    #[test]
    fn batch_shapes() {
        let s: Vec<f64> = (0..20).map(f64::from).collect();
        let w = make_windows(&s, 4, 2, 1).unwrap();
        let (x, y) = w.batch(&[0, 5, 5]).unwrap();
        assert_eq!(x.shape(), &[3, 4]);
        assert_eq!(y.shape(), &[3, 2]);
        assert_eq!(y.row(1), &[9.0, 10.0]);
    }
}
