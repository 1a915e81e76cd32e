//! JSON configuration documents.
//!
//! ```json
//! {
//!   "sensors": [{ "rate": 2.0 }, { "rate": 8.0 }],
//!   "service_rate": 4.0,
//!   "processes": [
//!     { "transition_matrix": [[0.4, 0.6], [0.3, 0.7]], "state_change_rate": 4.0 }
//!   ],
//!   "correlation": [[1.0], [0.5]]
//! }
//! ```
//!
//! `correlation` is row-major with one row per sensor and one column per
//! process. Field paths in error messages are zero-based.

use std::path::Path;

use aoi_corr::model::process_at;
use aoi_corr::SystemConfig;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSpec {
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    pub transition_matrix: Vec<Vec<f64>>,
    pub state_change_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub sensors: Vec<SensorSpec>,
    pub service_rate: f64,
    pub processes: Vec<ProcessSpec>,
    pub correlation: Vec<Vec<f64>>,
}

fn matrix(rows: &[Vec<f64>], cols: usize, field: &str) -> Result<DMatrix<f64>, CliError> {
    if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != cols) {
        return Err(CliError::Validation(format!(
            "{field}[{r}]: expected {cols} entries, found {}",
            row.len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

impl ConfigFile {
    pub fn to_system(&self) -> Result<SystemConfig, CliError> {
        if self.processes.is_empty() {
            return Err(CliError::Validation(
                "processes: at least one process required (M ≥ 1)".into(),
            ));
        }
        if self.sensors.is_empty() {
            return Err(CliError::Validation(
                "sensors: at least one sensor required (N ≥ 1)".into(),
            ));
        }
        let (n, m) = (self.sensors.len(), self.processes.len());
        if self.correlation.len() != n {
            return Err(CliError::Validation(format!(
                "correlation: expected {n} rows (one per sensor), found {}",
                self.correlation.len()
            )));
        }
        let correlation = matrix(&self.correlation, m, "correlation")?;
        let processes = self
            .processes
            .iter()
            .enumerate()
            .map(|(j, p)| {
                let field = format!("processes[{j}]");
                let k = p.transition_matrix.len();
                let omega = matrix(
                    &p.transition_matrix,
                    k,
                    &format!("{field}.transition_matrix"),
                )?;
                Ok(process_at(omega, p.state_change_rate, &field)?)
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        Ok(SystemConfig::new(
            self.sensors.iter().map(|s| s.rate).collect(),
            self.service_rate,
            correlation,
            processes,
        )?)
    }

    pub fn from_system(config: &SystemConfig) -> Self {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            m.row_iter().map(|r| r.iter().copied().collect()).collect()
        };
        ConfigFile {
            sensors: config
                .sensor_rates()
                .iter()
                .map(|&rate| SensorSpec { rate })
                .collect(),
            service_rate: config.service_rate(),
            processes: config
                .processes()
                .iter()
                .map(|p| ProcessSpec {
                    transition_matrix: rows(p.transition()),
                    state_change_rate: p.state_change_rate(),
                })
                .collect(),
            correlation: rows(config.correlation()),
        }
    }
}

/// Parses a configuration document; syntax errors carry line and column.
pub fn parse_config(text: &str, origin: &str) -> Result<SystemConfig, CliError> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|e| CliError::Parse {
        origin: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    file.to_system()
}

pub fn load_config(path: &Path) -> Result<SystemConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text, &path.display().to_string())
}
