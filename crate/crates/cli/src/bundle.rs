//! Result bundles: `result.json` plus flat CSV tables for plotting.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tvsetar::bootstrap::{CoverageReport, ParameterInterval, SupTBand};
use tvsetar::diagnostics::{AcfResult, LjungBoxResult};
use tvsetar::estimation::FitResult;
use tvsetar::studies::StudyReport;
use tvsetar::SetarModel;

use crate::config::RunConfig;
use crate::CliError;

pub const DOCUMENT: &str = "result.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub path: String,
    pub column: String,
    pub rows: usize,
    pub difference: usize,
    /// Observations after differencing.
    pub used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub model: SetarModel,
    pub len: usize,
    pub y0: f64,
    pub burn_in: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub acf: AcfResult,
    pub ljung_box: Vec<LjungBoxResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedInterval {
    pub parameter: String,
    #[serde(flatten)]
    pub interval: ParameterInterval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub b: usize,
    pub alpha: f64,
    pub dropped: usize,
    pub intervals: Vec<NamedInterval>,
    pub c_crit: f64,
    pub band_level: f64,
    pub floored: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<InputSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<FitResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<BootstrapSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudyReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coverage: Option<CoverageReport>,
    /// File names of the tables written next to the document.
    pub tables: Vec<String>,
}

impl ResultDocument {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        ResultDocument {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: config.seed,
            config: config.clone(),
            input: None,
            simulation: None,
            fit: None,
            diagnostics: None,
            bootstrap: None,
            study: None,
            coverage: None,
            tables: Vec::new(),
        }
    }
}

/// A flat table: an optional leading text column, then numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub label: Option<(String, Vec<String>)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            label: None,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_label(mut self, name: &str, values: Vec<String>) -> Self {
        self.label = Some((name.into(), values));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(&self.name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::io(&path, e))?;
        let mut header: Vec<&str> = Vec::new();
        if let Some((name, _)) = &self.label {
            header.push(name);
        }
        header.extend(self.columns.iter().map(String::as_str));
        w.write_record(&header).map_err(|e| CliError::io(&path, e))?;
        for (i, row) in self.rows.iter().enumerate() {
            let mut rec: Vec<String> = Vec::with_capacity(row.len() + 1);
            if let Some((_, labels)) = &self.label {
                rec.push(labels[i].clone());
            }
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(|e| CliError::io(&path, e))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))
    }

    /// Reads a table written by [`Bundle::write`]; a first column that does
    /// not parse as numbers is taken as the label column.
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e))?;
        let header: Vec<String> = r.headers().map_err(|e| CliError::io(path, e))?.iter().map(String::from).collect();
        let records: Vec<csv::StringRecord> = r.records().collect::<Result<_, _>>().map_err(|e| CliError::io(path, e))?;
        let labelled = !records.is_empty() && records.iter().any(|rec| rec.get(0).is_some_and(|c| c.parse::<f64>().is_err()));
        let skip = usize::from(labelled);
        let mut table = Table {
            name: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
            label: labelled.then(|| (header[0].clone(), records.iter().map(|r| r[0].to_string()).collect())),
            columns: header[skip..].to_vec(),
            rows: Vec::with_capacity(records.len()),
        };
        for rec in &records {
            let row = rec
                .iter()
                .skip(skip)
                .map(|c| c.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| CliError::io(path, e))?;
            table.rows.push(row);
        }
        Ok(table)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub document: ResultDocument,
    pub tables: Vec<Table>,
}

impl Bundle {
    pub fn new(document: ResultDocument) -> Self {
        Bundle {
            document,
            tables: Vec::new(),
        }
    }

    pub fn add(&mut self, table: Table) {
        self.document.tables.push(table.name.clone());
        self.tables.push(table);
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(DOCUMENT);
        let mut text = serde_json::to_string_pretty(&self.document).map_err(|e| CliError::io(&path, e))?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        for t in &self.tables {
            t.write(dir)?;
        }
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self, CliError> {
        let document = read_document(&dir.join(DOCUMENT))?;
        let tables = document
            .tables
            .iter()
            .map(|name| Table::read(&dir.join(name)))
            .collect::<Result<_, _>>()?;
        Ok(Bundle { document, tables })
    }
}

pub fn read_document(path: &Path) -> Result<ResultDocument, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::io(path, e))
}

/// Threshold band as a table `(t, gamma_hat, lower, upper, sd)`.
pub fn band_table(band: &SupTBand) -> Table {
    let mut t = Table::new("band.csv", &["t", "gamma_hat", "lower", "upper", "sd"]);
    for i in 0..band.center.len() {
        t.push(vec![i as f64, band.center[i], band.lower[i], band.upper[i], band.sd[i]]);
    }
    t
}

pub fn acf_table(acf: &AcfResult) -> Table {
    let mut t = Table::new("acf.csv", &["lag", "rho", "lower", "upper"]);
    for (lag, rho) in acf.lags.iter().zip(&acf.rho) {
        t.push(vec![*lag as f64, *rho, -acf.confidence_limit, acf.confidence_limit]);
    }
    t
}
