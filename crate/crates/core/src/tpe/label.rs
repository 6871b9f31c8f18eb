use serde::{Deserialize, Serialize};

use super::{tpe_optimize, SearchSpace, TpeSettings, Trial};
use crate::cmaes::{self, Configuration};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::problems::ObjectiveFunction;
use crate::selection::estimate_yopt;
use crate::stats::{auc_of_runs, median, step_runs};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelParams {
    pub tpe_budget: usize,
    pub run_budget: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub space: SearchSpace,
    pub settings: TpeSettings,
    pub execution: Execution,
}

impl LabelParams {
    pub fn new(tpe_budget: usize, run_budget: usize, repetitions: usize, seed: u64) -> Self {
        Self {
            tpe_budget,
            run_budget,
            repetitions,
            seed,
            space: SearchSpace::full(),
            settings: TpeSettings::default(),
            execution: Execution::default(),
        }
    }
}

/// Outcome of tuning the optimizer on one function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HpoResult {
    pub function_id: String,
    /// Best raw objective value seen in any run of any trial.
    pub y_hpo: f64,
    /// Optimum used to normalize the stored scores.
    pub y_opt: f64,
    /// Worst value of the function's sample, the other normalization bound.
    pub y_worst: f64,
    pub best: Configuration,
    pub best_score: f64,
    pub history: Vec<Trial>,
}

/// Normalization bounds; a degenerate pair gets a unit range so every score is defined.
fn bounds(y_opt: f64, y_worst: f64) -> (f64, f64) {
    if y_worst > y_opt {
        (y_opt, y_worst)
    } else {
        (y_opt, y_opt + 1.0)
    }
}

fn median_auc(traces: &[Vec<(usize, f64)>], y_opt: f64, y_worst: f64) -> Result<f64> {
    let (lo, hi) = bounds(y_opt, y_worst);
    let values = traces
        .iter()
        .map(|r| auc_of_runs(r, lo, hi).map(|a| a.value))
        .collect::<Result<Vec<_>>>()?;
    Ok(median(&values))
}

/// Tune the optimizer on `f` with TPE. Each trial's score is the median AUC over
/// `repetitions` seeded runs.
///
/// During the search the AUC is normalized by the known optimum if there is one,
/// otherwise by the best value seen so far. Once the search ends every score is
/// recomputed against the final optimum (the known one, or the rounded-down best
/// value found), so the stored history is internally consistent.
pub fn label_function(f: &ObjectiveFunction, y_worst: f64, params: &LabelParams) -> Result<HpoResult> {
    if params.run_budget == 0 || params.repetitions == 0 {
        return Err(Error::param("run budget and repetitions must be positive"));
    }
    if !y_worst.is_finite() {
        return Err(Error::param("worst sample value must be finite"));
    }
    let mut all_runs: Vec<Vec<Vec<(usize, f64)>>> = Vec::with_capacity(params.tpe_budget);
    let mut finals: Vec<f64> = Vec::with_capacity(params.tpe_budget);
    let mut running_best = f64::INFINITY;

    let history = tpe_optimize(
        |trial, cfg: &Configuration| {
            let traces = params.execution.try_map(params.repetitions, |rep| {
                let seed = crate::seed_path!(params.seed, "run", trial, rep);
                cmaes::run(f, cfg, params.run_budget, seed).map(|t| step_runs(&t.best_so_far))
            })?;
            let best = traces
                .iter()
                .map(|r| r.last().expect("non-empty trace").1)
                .fold(f64::INFINITY, f64::min);
            running_best = running_best.min(best);
            let y_opt = f.known_optimum().unwrap_or(running_best);
            let score = median_auc(&traces, y_opt, y_worst)?;
            all_runs.push(traces);
            finals.push(best);
            Ok(score)
        },
        params.space,
        params.tpe_budget,
        &params.settings,
        crate::seed_path!(params.seed, "search"),
    )?;

    let y_hpo = running_best;
    let y_opt = match f.known_optimum() {
        Some(v) => v,
        None => estimate_yopt(y_hpo)?,
    };
    let trials: Vec<Trial> = history
        .trials
        .into_iter()
        .zip(&all_runs)
        .zip(&finals)
        .map(|((t, runs), fin)| {
            Ok(Trial {
                config: t.config,
                score: median_auc(runs, y_opt, y_worst)?,
                final_best: *fin,
            })
        })
        .collect::<Result<_>>()?;
    let best = super::TrialHistory { trials: trials.clone() }
        .best()
        .cloned()
        .expect("budget covers the startup trials");
    Ok(HpoResult {
        function_id: f.id().to_string(),
        y_hpo,
        y_opt,
        y_worst,
        best: best.config,
        best_score: best.score,
        history: trials,
    })
}

impl HpoResult {
    pub fn trial_history(&self) -> super::TrialHistory {
        super::TrialHistory {
            trials: self.history.clone(),
        }
    }
}
