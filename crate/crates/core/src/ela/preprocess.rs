use serde::{Deserialize, Serialize};

use super::ElaVector;
use crate::error::{Error, Result};

/// Features whose absolute Pearson correlation with a kept feature exceeds this are dropped.
pub const PRUNE_THRESHOLD: f64 = 0.95;

fn column(rows: &[ElaVector], j: usize) -> Vec<f64> {
    rows.iter().map(|r| r.values()[j]).collect()
}

fn check_rows(rows: &[ElaVector], min: usize) -> Result<&[String]> {
    if rows.len() < min {
        return Err(Error::param(format!("need at least {min} feature rows, got {}", rows.len())));
    }
    let names = rows[0].names();
    if rows.iter().any(|r| r.names() != names) {
        return Err(Error::param("feature rows have different schemas"));
    }
    if rows.iter().any(|r| r.values().iter().any(|v| !v.is_finite())) {
        return Err(Error::param("feature matrix contains non-finite values"));
    }
    Ok(names)
}

fn abs_pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        None
    } else {
        Some((sab / (saa * sbb).sqrt()).abs())
    }
}

/// Greedy correlation pruning in the rows' feature order.
///
/// A feature is kept if its absolute correlation with every previously kept feature is at
/// most `threshold`. Constant features count as correlated with everything and are dropped.
pub fn prune_correlated(rows: &[ElaVector], threshold: f64) -> Result<Vec<String>> {
    let names = check_rows(rows, 3)?;
    let mut kept: Vec<(usize, Vec<f64>)> = Vec::new();
    for j in 0..names.len() {
        let col = column(rows, j);
        if abs_pearson(&col, &col).is_none() {
            log::debug!("dropping constant feature {}", names[j]);
            continue;
        }
        let redundant = kept
            .iter()
            .any(|(_, k)| abs_pearson(&col, k).is_none_or(|r| r > threshold));
        if !redundant {
            kept.push((j, col));
        }
    }
    Ok(kept.into_iter().map(|(j, _)| names[j].clone()).collect())
}

/// Per-feature min-max scaling restricted to a kept subset of features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    pub kept: Vec<String>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Learn min/max of each `kept` feature over the training rows.
pub fn fit_scaler(rows: &[ElaVector], kept: &[String]) -> Result<FeatureScaler> {
    let names = check_rows(rows, 2)?;
    let mut min = Vec::with_capacity(kept.len());
    let mut max = Vec::with_capacity(kept.len());
    for k in kept {
        let j = names.iter().position(|n| n == k).ok_or_else(|| Error::Schema {
            missing: vec![k.clone()],
            extra: vec![],
        })?;
        let col = column(rows, j);
        min.push(col.iter().copied().fold(f64::INFINITY, f64::min));
        max.push(col.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }
    Ok(FeatureScaler {
        kept: kept.to_vec(),
        min,
        max,
    })
}

impl FeatureScaler {
    /// Scale the kept features of `v`. Values outside the training range pass through
    /// unclipped; zero-range features map to 0.
    pub fn apply(&self, v: &ElaVector) -> Result<ElaVector> {
        let missing: Vec<String> = self.kept.iter().filter(|k| v.get(k).is_none()).cloned().collect();
        if !missing.is_empty() {
            let extra = v
                .names()
                .iter()
                .filter(|n| !self.kept.contains(n))
                .cloned()
                .collect();
            return Err(Error::Schema { missing, extra });
        }
        let values = self
            .kept
            .iter()
            .enumerate()
            .map(|(i, k)| {
                let x = v.get(k).expect("presence checked above");
                let range = self.max[i] - self.min[i];
                if range > 0.0 {
                    (x - self.min[i]) / range
                } else {
                    0.0
                }
            })
            .collect();
        Ok(ElaVector::new(self.kept.clone(), values))
    }

    pub fn width(&self) -> usize {
        self.kept.len()
    }
}
