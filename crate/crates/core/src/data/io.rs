use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::series::Series;

/// A value column together with the optional timestamp column it was read with.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedSeries {
    pub timestamps: Option<Vec<String>>,
    pub values: Series,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn column_index(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::MissingColumn(name.to_string()))
}

/// Reads `value_column` (and `time_column` when given) from a headed CSV file.
/// Rows are numbered from 1, excluding the header.
pub fn load_csv_with_time(path: &Path, value_column: &str, time_column: Option<&str>) -> Result<TimedSeries> {
    let text = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_slice());
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let vi = column_index(&headers, value_column)?;
    let ti = time_column.map(|c| column_index(&headers, c)).transpose()?;
    let mut values = Vec::new();
    let mut stamps = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let row = r + 1;
        let cell = record.get(vi).unwrap_or("");
        let v: f64 = cell.parse().map_err(|_| Error::NonNumericCell {
            row,
            value: cell.to_string(),
        })?;
        if !v.is_finite() {
            return Err(Error::NonFiniteInput { index: r });
        }
        values.push(v);
        if let Some(ti) = ti {
            stamps.push(record.get(ti).unwrap_or("").to_string());
        }
    }
    if values.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(TimedSeries {
        timestamps: ti.map(|_| stamps),
        values: Series::new(values),
    })
}

pub fn load_csv(path: &Path, value_column: &str) -> Result<Series> {
    Ok(load_csv_with_time(path, value_column, None)?.values)
}

/// Two-column CSV text; values use the shortest representation that reads back exactly.
pub fn series_csv(index_header: &str, value_header: &str, index: Option<&[String]>, values: &[f64]) -> String {
    let mut s = format!("{index_header},{value_header}\n");
    for (t, v) in values.iter().enumerate() {
        match index {
            Some(ix) => {
                let _ = writeln!(s, "{},{v}", ix[t]);
            }
            None => {
                let _ = writeln!(s, "{t},{v}");
            }
        }
    }
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes `values` as a `t,value` CSV.
pub fn write_series_csv(path: &Path, values: &[f64]) -> Result<()> {
    write_text(path, &series_csv("t", "value", None, values))
}
