use weits_core::data::{benchmark_spec, load_csv_with_time, synthesize, TimedSeries};

use crate::config::RunConfig;
use crate::error::CliError;

/// The configured series, before any scaling.
pub fn load_series(cfg: &RunConfig) -> Result<TimedSeries, CliError> {
    let d = &cfg.data;
    if let Some(path) = &d.path {
        return Ok(load_csv_with_time(path, &d.column, d.time_column.as_deref())?);
    }
    let spec = match (&d.synthetic, &d.benchmark) {
        (Some(s), _) => s.clone(),
        (None, Some(b)) => benchmark_spec(b.length, b.noise, b.seed),
        (None, None) => return Err(CliError::Config("no data source configured".into())),
    };
    Ok(TimedSeries {
        timestamps: None,
        values: synthesize(&spec)?,
    })
}
