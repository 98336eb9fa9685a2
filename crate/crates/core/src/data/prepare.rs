use super::scale::{standardize, Scaler};
use super::split::{split, Dataset, Partition};
use crate::error::Result;
use crate::series::Series;
use crate::training::WindowSet;

/// A split, standardized series cut into train, validation and test windows.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub dataset: Dataset,
    pub scaled: Series,
    pub scaler: Scaler,
    pub train: WindowSet,
    pub val: WindowSet,
    pub test: WindowSet,
}

/// Splits chronologically with the given fractions, scales with train statistics and
/// windows each partition independently.
pub fn prepare(
    series: &[f64],
    fractions: [f64; 3],
    lookback: usize,
    horizon: usize,
    stride: usize,
) -> Result<Prepared> {
    let dataset = split(series, fractions[0], fractions[1], fractions[2], lookback + horizon)?;
    let (scaled, scaler) = standardize(&dataset)?;
    let win = |p| dataset.windows(&scaled, p, lookback, horizon, stride);
    Ok(Prepared {
        train: win(Partition::Train)?,
        val: win(Partition::Val)?,
        test: win(Partition::Test)?,
        scaled,
        scaler,
        dataset,
    })
}
