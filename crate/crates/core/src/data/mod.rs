//! Series ingestion, splitting, scaling and synthetic generation.

mod io;
mod prepare;
mod scale;
mod split;
mod synth;

pub use io::{load_csv, load_csv_with_time, series_csv, write_series_csv, write_text, TimedSeries};
pub use prepare::{prepare, Prepared};
pub use scale::{destandardize, standardize, Scaler};
pub use split::{split, Dataset, Partition};
pub use synth::{benchmark_spec, multiplicative_noise, synthesize, Component, SyntheticSpec};
