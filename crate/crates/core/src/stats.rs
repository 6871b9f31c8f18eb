//! Anytime performance (AUC), baseline selection and the paired Wilcoxon comparison.

use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::cmaes::Configuration;
use crate::error::{Error, Result};
use crate::tpe::TrialHistory;

/// Largest sample (after dropping zero differences) for which Wilcoxon p-values are exact.
pub const WILCOXON_EXACT_MAX: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucScore {
    pub value: f64,
    pub y_opt: f64,
    pub y_worst: f64,
    pub budget: usize,
}

/// Mean of the min-max normalized (and clamped) best-so-far values over the budget.
/// Lower is better.
pub fn auc(best_so_far: &[f64], y_opt: f64, y_worst: f64) -> Result<AucScore> {
    auc_of_runs(&step_runs(best_so_far), y_opt, y_worst)
}

/// Run-length form of a trace: `(length, value)` for each constant stretch.
pub fn step_runs(trace: &[f64]) -> Vec<(usize, f64)> {
    let mut runs: Vec<(usize, f64)> = Vec::new();
    for &v in trace {
        match runs.last_mut() {
            Some((len, last)) if last.to_bits() == v.to_bits() => *len += 1,
            _ => runs.push((1, v)),
        }
    }
    runs
}

/// [`auc`] of a run-length encoded trace.
pub fn auc_of_runs(runs: &[(usize, f64)], y_opt: f64, y_worst: f64) -> Result<AucScore> {
    if !(y_worst > y_opt) || !y_opt.is_finite() || !y_worst.is_finite() {
        return Err(Error::param(format!(
            "AUC needs y_worst > y_opt (got {y_worst} and {y_opt})"
        )));
    }
    let budget: usize = runs.iter().map(|r| r.0).sum();
    if budget == 0 {
        return Err(Error::param("AUC of an empty trace"));
    }
    let range = y_worst - y_opt;
    let mut sum = 0.0;
    for &(len, v) in runs {
        let norm = ((v - y_opt) / range).clamp(0.0, 1.0);
        let norm = if norm.is_nan() { 1.0 } else { norm };
        sum += norm * len as f64;
    }
    Ok(AucScore {
        value: sum / budget as f64,
        y_opt,
        y_worst,
        budget,
    })
}

pub fn median(values: &[f64]) -> f64 {
    let mut s = values.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => s[n / 2],
        _ => 0.5 * (s[n / 2 - 1] + s[n / 2]),
    }
}

/// Best-found configuration of one function: the first minimum in history order.
pub fn select_vbs(history: &TrialHistory) -> Result<Configuration> {
    history
        .best()
        .map(|t| t.config.clone())
        .ok_or_else(|| Error::param("VBS of an empty history"))
}

/// Configuration with the lowest mean score across functions.
///
/// Candidates are all configurations tried on any function. A configuration that was
/// never evaluated on some function is assigned that function's median history score.
pub fn select_sbs(per_function: &[(String, TrialHistory)]) -> Result<Configuration> {
    if per_function.is_empty() {
        return Err(Error::param("SBS needs at least one function"));
    }
    let mut keys: Vec<String> = Vec::new();
    let mut configs: Vec<Configuration> = Vec::new();
    for (id, h) in per_function {
        if h.trials.is_empty() {
            return Err(Error::param(format!("empty history for {id}")));
        }
        for t in &h.trials {
            let key = t.config.to_string();
            if !keys.contains(&key) {
                keys.push(key);
                configs.push(t.config.clone());
            }
        }
    }
    let mut imputed = 0usize;
    let mut means = vec![0.0; keys.len()];
    for (_, h) in per_function {
        let fallback = median(&h.trials.iter().map(|t| t.score).collect::<Vec<_>>());
        let own: Vec<String> = h.trials.iter().map(|t| t.config.to_string()).collect();
        for (k, key) in keys.iter().enumerate() {
            let score = own
                .iter()
                .zip(&h.trials)
                .filter(|(o, _)| *o == key)
                .map(|(_, t)| t.score)
                .fold(None, |acc: Option<f64>, s| Some(acc.map_or(s, |a| a.min(s))));
            means[k] += score.unwrap_or_else(|| {
                imputed += 1;
                fallback
            });
        }
    }
    log::info!("SBS: {} candidates, {imputed} imputed scores", keys.len());
    let best = (0..keys.len())
        .min_by(|&a, &b| means[a].total_cmp(&means[b]).then(a.cmp(&b)))
        .expect("at least one candidate");
    Ok(configs.swap_remove(best))
}

/// Ranks of `values` (1-based) with ties receiving their average rank, doubled so
/// they are integers.
fn doubled_ranks(values: &[f64]) -> Vec<u64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && values[idx[j]] == values[idx[i]] {
            j += 1;
        }
        // average of ranks i+1..=j, doubled
        let r = (i + 1 + j) as u64;
        for &k in &idx[i..j] {
            ranks[k] = r;
        }
        i = j;
    }
    ranks
}

/// One-sided Wilcoxon signed-rank test of H1: `a` tends to be smaller than `b`.
///
/// Zero differences are dropped and tied magnitudes share average ranks. The p-value is
/// exact up to [`WILCOXON_EXACT_MAX`] non-zero pairs and uses the tie-corrected normal
/// approximation beyond. If every difference is zero, the p-value is 1.
pub fn wilcoxon_one_sided(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::param("paired samples must have equal length"));
    }
    if a.len() < 5 {
        return Err(Error::param("the signed-rank test needs at least 5 pairs"));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::param("non-finite paired difference"));
    }
    let n = diffs.len();
    if n == 0 {
        return Ok(1.0);
    }
    let ranks = doubled_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w2: u64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    if n <= WILCOXON_EXACT_MAX {
        // counts[s] = number of sign assignments whose doubled positive-rank sum is s
        let total: u64 = ranks.iter().sum();
        let mut counts = vec![0f64; total as usize + 1];
        counts[0] = 1.0;
        let mut reach = 0usize;
        for &r in &ranks {
            let r = r as usize;
            for s in (0..=reach).rev() {
                if counts[s] > 0.0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let below: f64 = counts[..=w2 as usize].iter().sum();
        return Ok((below / 2f64.powi(n as i32)).min(1.0));
    }
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    magnitudes.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && magnitudes[j] == magnitudes[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let w = w2 as f64 / 2.0;
    let z = (w - mean + 0.5) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(normal.cdf(z))
}

/// Reference configurations every prediction is compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSet {
    pub default_cfg: Configuration,
    pub sbs_cfg: Configuration,
    /// Per test function, in suite order.
    pub vbs_cfg: Vec<(String, Configuration)>,
}

/// One line of the comparison report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub function_id: String,
    pub baseline: String,
    pub median_auc_ours: f64,
    pub median_auc_baseline: f64,
    pub p_value: f64,
    #[serde(rename = "significant_at_0.05")]
    pub significant: bool,
}

impl ComparisonRow {
    pub fn new(function_id: &str, baseline: &str, ours: &[f64], theirs: &[f64]) -> Result<Self> {
        let p_value = wilcoxon_one_sided(ours, theirs)?;
        Ok(Self {
            function_id: function_id.to_string(),
            baseline: baseline.to_string(),
            median_auc_ours: median(ours),
            median_auc_baseline: median(theirs),
            p_value,
            significant: p_value < 0.05,
        })
    }
}

pub fn write_report(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<Vec<ComparisonRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmaes::default_config;
    use crate::tpe::Trial;

    #[test]
    fn auc_examples() {
        assert_eq!(auc(&[0.0; 4], 0.0, 1.0).unwrap().value, 0.0);
        assert_eq!(auc(&[1.0; 4], 0.0, 1.0).unwrap().value, 1.0);
        assert_eq!(auc(&[1.0, 1.0, 0.0, 0.0], 0.0, 1.0).unwrap().value, 0.5);
        assert_eq!(auc(&[7.0, -1.0], -1.0, 3.0).unwrap().value, 0.5);
        assert!(auc(&[1.0], 1.0, 1.0).is_err());
        assert!(auc(&[], 0.0, 1.0).is_err());
    }

    #[test]
    fn wilcoxon_small_cases() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [2.0, 4.0, 6.0, 8.0, 10.0];
        assert_eq!(wilcoxon_one_sided(&a, &b).unwrap(), 0.03125);
        assert_eq!(wilcoxon_one_sided(&a, &a).unwrap(), 1.0);
        assert_eq!(wilcoxon_one_sided(&b, &a).unwrap(), 1.0);
        assert!(wilcoxon_one_sided(&a[..4], &b[..4]).is_err());
    }

    #[test]
    fn wilcoxon_normal_branch_is_close_to_exact() {
        // 26 non-zero differences exercises the approximation; compare against the
        // exact distribution computed for the same ranks.
        let a: Vec<f64> = (0..26).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..26).map(|i| (i as f64 * 0.37).sin() + 0.3 - 0.02 * i as f64).collect();
        let approx = wilcoxon_one_sided(&a, &b).unwrap();
        let exact = wilcoxon_one_sided(&a[..25], &b[..25]).unwrap();
        assert!(approx > 0.0 && approx < 1.0);
        assert!((approx - exact).abs() < 0.1, "{approx} vs {exact}");
    }

    fn history(scores: &[(Configuration, f64)]) -> TrialHistory {
        TrialHistory {
            trials: scores
                .iter()
                .map(|(c, s)| Trial {
                    config: c.clone(),
                    score: *s,
                    final_best: 0.0,
                })
                .collect(),
        }
    }

    #[test]
    fn vbs_first_minimum() {
        let base = default_config(3).with_continuous([10.0, 0.4, 0.2, 0.5, 0.5, 0.1, 0.1]);
        let c1 = base.with_categorical([1, 0, 0, 0]);
        let h = history(&[(base.clone(), 0.3), (c1.clone(), 0.1), (base.clone(), 0.1)]);
        assert_eq!(select_vbs(&h).unwrap(), c1);
    }

    #[test]
    fn sbs_imputes_missing_scores() {
        let base = default_config(3).with_continuous([10.0, 0.4, 0.2, 0.5, 0.5, 0.1, 0.1]);
        let a = base.with_categorical([1, 0, 0, 0]);
        let b = base.with_categorical([0, 1, 0, 0]);
        let c = base.with_categorical([0, 0, 1, 0]);
        // f1: a=0.1, b=0.5, c=0.9 (median 0.5); f2: b=0.2, c=0.4 (median 0.3); a imputed 0.3.
        let h1 = history(&[(a.clone(), 0.1), (b.clone(), 0.5), (c.clone(), 0.9)]);
        let h2 = history(&[(b.clone(), 0.2), (c, 0.4)]);
        let sbs = select_sbs(&[("f1".into(), h1.clone()), ("f2".into(), h2)]).unwrap();
        assert_eq!(sbs, a); // means: a 0.2, b 0.35, c 0.65
        assert_eq!(select_sbs(&[("f1".into(), h1)]).unwrap(), a);
        assert!(select_sbs(&[]).is_err());
    }
}
