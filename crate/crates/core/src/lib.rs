//! Wavelet-infused doubly-residual forecasting.
//!
//! A series is split into a multilevel wavelet pyramid whose branches are blended into
//! the inputs of a stack of neural basis-expansion blocks. Each stack emits a backcast,
//! subtracted before the next stack, and a forecast; stack forecasts add up to the
//! global forecast.

pub mod data;
pub mod ensemble;
pub mod error;
pub mod model;
pub mod nn;
pub mod series;
pub mod training;
pub mod wavelet;

pub use error::{Error, Result};
pub use series::Series;
