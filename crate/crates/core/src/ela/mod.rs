//! Sampling, landscape features and feature preprocessing.

mod doe;
mod features;
mod preprocess;

use std::io::Write;
use std::path::Path;

pub use doe::{latin_hypercube, sample_doe, Doe};
pub use features::{compute_ela, feature_names};
pub use preprocess::{fit_scaler, prune_correlated, FeatureScaler, PRUNE_THRESHOLD};

use crate::error::{Error, Result};

/// Named feature values in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct ElaVector {
    names: Vec<String>,
    values: Vec<f64>,
}

impl ElaVector {
    /// # Panics
    /// If the two vectors differ in length.
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Self {
        assert_eq!(names.len(), values.len(), "names and values differ in length");
        Self { names, values }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Write a feature matrix: `function_id` then one column per feature.
pub fn write_feature_csv(path: &Path, names: &[String], rows: &[(String, Vec<f64>)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["function_id".to_string()];
    header.extend(names.iter().cloned());
    w.write_record(&header)?;
    for (id, values) in rows {
        let mut rec = vec![id.clone()];
        rec.extend(values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Read a feature matrix written by [`write_feature_csv`].
pub fn read_feature_csv(path: &Path) -> Result<(Vec<String>, Vec<(String, Vec<f64>)>)> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let id = rec.get(0).unwrap_or_default().to_string();
        let values = rec
            .iter()
            .skip(1)
            .map(|s| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    position: line + 1,
                    message: format!("bad feature value '{s}' in {}", path.display()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((id, values));
    }
    Ok((names, rows))
}

/// Write the feature-name manifest as a JSON list.
pub fn write_manifest(path: &Path, names: &[String]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(&mut f, names)?;
    f.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    Ok(())
}
