//! Screening of generated training functions: optimum estimation, ranking
//! ambiguity and optimum-outlier tests.

use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tpe::HpoResult;

/// Scores closer than this are treated as tied when ranking configurations.
pub const DEFAULT_TIE_TOLERANCE: f64 = 1e-6;
/// Rankings with τ below this are ambiguous.
pub const TAU_THRESHOLD: f64 = 0.9;
/// Optimum z-scores beyond this magnitude are outliers.
pub const Z_THRESHOLD: f64 = 3.0;

/// Round a best-found value down to a "round" global-optimum estimate.
///
/// Below 10 in magnitude this is the floor; from 10 to 100 it is the next lower
/// multiple of 10; beyond, the value is floored at its second significant digit.
pub fn estimate_yopt(y_hpo: f64) -> Result<f64> {
    if !y_hpo.is_finite() {
        return Err(Error::param(format!("cannot estimate an optimum from {y_hpo}")));
    }
    let a = y_hpo.abs();
    let est = if a < 10.0 {
        y_hpo.floor()
    } else if a < 100.0 {
        (y_hpo / 10.0).floor() * 10.0
    } else {
        let scale = 10f64.powi(a.log10().floor() as i32 - 1);
        (y_hpo / scale).floor() * scale
    };
    Ok(est)
}

/// Kendall τ-b between two samples, in O(n log n).
///
/// Returns 0 when either sample is entirely tied.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "samples differ in length");
    let n = x.len();
    if n < 2 {
        return 0.0;
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let tied_pairs = |run: u64| run * (run - 1) / 2;
    let (mut tx, mut txy) = (0u64, 0u64);
    let (mut run_x, mut run_xy) = (1u64, 1u64);
    for w in pairs.windows(2) {
        if w[0].0 == w[1].0 {
            run_x += 1;
            if w[0].1 == w[1].1 {
                run_xy += 1;
            } else {
                txy += tied_pairs(run_xy);
                run_xy = 1;
            }
        } else {
            tx += tied_pairs(run_x);
            txy += tied_pairs(run_xy);
            run_x = 1;
            run_xy = 1;
        }
    }
    tx += tied_pairs(run_x);
    txy += tied_pairs(run_xy);

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = ys.clone();
    let swaps = merge_count(&mut ys, &mut buf);

    let mut ty = 0u64;
    let mut run_y = 1u64;
    for w in ys.windows(2) {
        if w[0] == w[1] {
            run_y += 1;
        } else {
            ty += tied_pairs(run_y);
            run_y = 1;
        }
    }
    ty += tied_pairs(run_y);

    let n0 = tied_pairs(n as u64);
    let denom = ((n0 - tx) as f64 * (n0 - ty) as f64).sqrt();
    if denom == 0.0 {
        return 0.0;
    }
    let numer = n0 as f64 - tx as f64 - ty as f64 + txy as f64 - 2.0 * swaps as f64;
    numer / denom
}

/// Merge sort counting inversions (strictly decreasing pairs).
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid], &mut buf[..mid]) + merge_count(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j].total_cmp(&v[i]) == Ordering::Less {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

/// τ-b between the tied ranking of `scores` and the strict ranking that breaks
/// ties by input order. Scores tie when they chain within `tie_tolerance`.
pub fn ranking_ambiguity(scores: &[f64], tie_tolerance: f64) -> Result<f64> {
    if scores.len() < 2 {
        return Err(Error::param("ranking ambiguity needs at least two scores"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::param("non-finite configuration score"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let mut tied = vec![0.0; scores.len()];
    let mut strict = vec![0.0; scores.len()];
    let mut group = 0usize;
    for (pos, w) in order.iter().enumerate() {
        if pos > 0 && scores[*w] - scores[order[pos - 1]] > tie_tolerance {
            group += 1;
        }
        tied[*w] = group as f64;
        strict[*w] = pos as f64;
    }
    Ok(kendall_tau_b(&tied, &strict))
}

/// z-score of the best-found value within the per-configuration final values
/// (sample standard deviation).
pub fn optimum_outlier(y_opt_found: f64, final_values: &[f64]) -> Result<f64> {
    if final_values.len() < 3 {
        return Err(Error::param("outlier test needs at least three values"));
    }
    let n = final_values.len() as f64;
    let mean = final_values.iter().sum::<f64>() / n;
    let var = final_values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::Degenerate);
    }
    Ok((y_opt_found - mean) / sd)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionVerdict {
    pub y_opt: f64,
    pub kendall_tau: f64,
    pub z_score: f64,
    pub ambiguous: bool,
    pub outlier: bool,
    pub accepted: bool,
    pub reasons: Vec<String>,
}

/// Apply all three screens to a finished hyperparameter search.
pub fn screen(hpo: &HpoResult, tie_tolerance: f64) -> Result<SelectionVerdict> {
    let y_opt = estimate_yopt(hpo.y_hpo)?;
    let scores: Vec<f64> = hpo.history.iter().map(|t| t.score).collect();
    let finals: Vec<f64> = hpo.history.iter().map(|t| t.final_best).collect();
    let tau = ranking_ambiguity(&scores, tie_tolerance)?;
    let mut reasons = Vec::new();
    let mut ambiguous = tau < TAU_THRESHOLD;
    if ambiguous {
        reasons.push(format!("ambiguous ranking (tau {tau:.4} < {TAU_THRESHOLD})"));
    }
    let (z, outlier) = match optimum_outlier(hpo.y_hpo, &finals) {
        Ok(z) => (z, z.abs() > Z_THRESHOLD),
        Err(Error::Degenerate) => {
            ambiguous = true;
            reasons.push("all configurations reach the same final value".to_string());
            (0.0, false)
        }
        Err(e) => return Err(e),
    };
    if outlier {
        reasons.push(format!("optimum is an outlier (z {z:.3})"));
    }
    Ok(SelectionVerdict {
        y_opt,
        kendall_tau: tau,
        z_score: z,
        ambiguous,
        outlier,
        accepted: !ambiguous && !outlier,
        reasons,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub function_id: String,
    pub y_opt: f64,
    pub tau: f64,
    pub z: f64,
    pub accepted: bool,
    pub reasons: String,
}

impl LedgerRow {
    pub fn new(function_id: &str, v: &SelectionVerdict) -> Self {
        Self {
            function_id: function_id.to_string(),
            y_opt: v.y_opt,
            tau: v.kendall_tau,
            z: v.z_score,
            accepted: v.accepted,
            reasons: v.reasons.join("; "),
        }
    }
}

pub fn write_ledger(path: &Path, rows: &[LedgerRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Read a verdict ledger; a missing file is an empty ledger.
pub fn read_ledger(path: &Path) -> Result<Vec<LedgerRow>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optimum_estimates() {
        let cases = [
            (7.3, 7.0),
            (-3.2, -4.0),
            (57.2, 50.0),
            (-1234.5, -1300.0),
            (0.0, 0.0),
            (9.999, 9.0),
            (10.0, 10.0),
            (123.0, 120.0),
        ];
        for (y, want) in cases {
            assert_eq!(estimate_yopt(y).unwrap(), want, "{y}");
        }
        assert!(estimate_yopt(f64::NAN).is_err());
    }

    #[test]
    fn tau_examples() {
        assert_eq!(ranking_ambiguity(&[0.1, 0.2, 0.3], 1e-6).unwrap(), 1.0);
        let t = ranking_ambiguity(&[0.1, 0.1, 0.2], 1e-6).unwrap();
        assert!((t - 2.0 / 6f64.sqrt()).abs() < 1e-12);
        assert_eq!(ranking_ambiguity(&[0.5; 4], 1e-6).unwrap(), 0.0);
        // chained tolerance: 0.1, 0.1+0.9e-6, 0.1+1.8e-6 form one group
        assert_eq!(ranking_ambiguity(&[0.1, 0.1000009, 0.1000018], 1e-6).unwrap(), 0.0);
    }

    #[test]
    fn tau_b_simple() {
        assert_eq!(kendall_tau_b(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), -1.0);
        assert_eq!(kendall_tau_b(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), 1.0);
    }

    #[test]
    fn z_scores() {
        assert_eq!(optimum_outlier(10.0, &[9.0, 10.0, 11.0, 10.0, 10.0]).unwrap(), 0.0);
        // mean 10, sample sd 1
        let v = [9.0, 11.0, 9.0, 11.0, 10.0, 10.0];
        let sd = (4.0f64 / 5.0).sqrt();
        let z = optimum_outlier(10.0 - 4.0 * sd, &v).unwrap();
        assert!((z + 4.0).abs() < 1e-12);
        assert!(matches!(optimum_outlier(1.0, &[2.0; 5]), Err(Error::Degenerate)));
    }
}
