//! Delimited text input: header row, one numeric value column selected by
//! name, optional date column carried through as labels.

use std::io::Read;
use std::path::Path;

use tvsetar::TimeSeries;

use crate::config::DataConfig;
use crate::CliError;

pub fn read_series(path: &Path, data: &DataConfig) -> Result<TimeSeries, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::ingest(0, format!("{}: {e}", path.display())))?;
    read_series_from(file, data)
}

pub fn read_series_from<R: Read>(reader: R, data: &DataConfig) -> Result<TimeSeries, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .delimiter(data.delimiter as u8)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| CliError::ingest(1, e.to_string()))?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::ingest(1, format!("no column named '{name}' in header")))
    };
    let value_col = find(&data.column)?;
    let date_col = data.date_column.as_deref().map(find).transpose()?;

    let mut values = Vec::new();
    let mut dates = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::ingest(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = record.get(value_col).unwrap_or("");
        if cell.is_empty() {
            return Err(CliError::ingest(line, format!("missing value in column '{}'", data.column)));
        }
        let v: f64 = cell
            .parse()
            .map_err(|_| CliError::ingest(line, format!("'{cell}' in column '{}' is not a number", data.column)))?;
        if !v.is_finite() {
            return Err(CliError::ingest(line, format!("non-finite value '{cell}'")));
        }
        values.push(v);
        if let Some(c) = date_col {
            dates.push(record.get(c).unwrap_or("").to_string());
        }
    }
    if values.len() < 2 {
        return Err(CliError::ingest(0, format!("input has {} data rows; at least 2 are needed", values.len())));
    }
    let series = if date_col.is_some() {
        TimeSeries::with_timestamps(values, dates)
    } else {
        TimeSeries::new(values)
    };
    series.map_err(|e| CliError::ingest(0, e.to_string()))
}
