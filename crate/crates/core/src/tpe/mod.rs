//! Tree-structured Parzen estimator over the CMA-ES configuration space.

mod label;
mod parzen;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cmaes::{default_config, Configuration, CATEGORICAL_SIZES, CONTINUOUS_DOMAINS};
use crate::error::{Error, Result};
use crate::seed;

pub use label::{label_function, HpoResult, LabelParams};

/// Constants of the sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TpeSettings {
    /// Fraction of trials forming the "good" set.
    pub gamma: f64,
    /// Uniformly random trials before the model is used.
    pub n_startup: usize,
    /// Candidates drawn from the good density per proposal.
    pub n_candidates: usize,
}

impl Default for TpeSettings {
    fn default() -> Self {
        Self {
            gamma: 0.25,
            n_startup: 20,
            n_candidates: 24,
        }
    }
}

/// The configuration domains searched. With `continuous_only`, the four categorical
/// hyperparameters stay at their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct SearchSpace {
    pub continuous_only: bool,
}

impl SearchSpace {
    pub fn full() -> Self {
        Self { continuous_only: false }
    }

    pub fn continuous() -> Self {
        Self { continuous_only: true }
    }

    fn to_config(self, cont: [f64; 7], cat: [usize; 4]) -> Configuration {
        let base = default_config(2).with_continuous(cont);
        if self.continuous_only {
            base
        } else {
            base.with_categorical(cat)
        }
    }

    fn uniform(self, rng: &mut seed::Rng) -> Configuration {
        let cont = std::array::from_fn(|i| {
            let (_, lo, hi) = CONTINUOUS_DOMAINS[i];
            rng.random_range(lo..=hi)
        });
        let cat = std::array::from_fn(|i| rng.random_range(0..CATEGORICAL_SIZES[i].1));
        self.to_config(cont, cat)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub config: Configuration,
    /// Median AUC over repetitions; lower is better.
    pub score: f64,
    /// Best raw objective value reached by this configuration.
    #[serde(default)]
    pub final_best: f64,
}

/// Trials in the order they were evaluated.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrialHistory {
    pub trials: Vec<Trial>,
}

impl TrialHistory {
    /// First trial with the lowest score.
    pub fn best(&self) -> Option<&Trial> {
        self.trials
            .iter()
            .enumerate()
            .min_by(|(i, a), (j, b)| a.score.total_cmp(&b.score).then(i.cmp(j)))
            .map(|(_, t)| t)
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }
}

/// Propose the next configuration given the trials so far.
fn propose(history: &TrialHistory, space: SearchSpace, settings: &TpeSettings, rng: &mut seed::Rng) -> Configuration {
    let n = history.len();
    if n < settings.n_startup.max(2) {
        return space.uniform(rng);
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| history.trials[a].score.total_cmp(&history.trials[b].score).then(a.cmp(&b)));
    let n_good = ((settings.gamma * n as f64).ceil() as usize).clamp(1, n - 1);
    let (good, bad) = order.split_at(n_good);

    let cont_of = |idx: &[usize], k: usize| -> Vec<f64> {
        idx.iter()
            .map(|&i| history.trials[i].config.continuous_values().expect("history configs are fixed")[k])
            .collect()
    };
    let cat_of = |idx: &[usize], k: usize| -> Vec<usize> {
        idx.iter().map(|&i| history.trials[i].config.categorical_indices()[k]).collect()
    };

    let cont_models: Vec<(parzen::Parzen, parzen::Parzen)> = (0..7)
        .map(|k| {
            let (_, lo, hi) = CONTINUOUS_DOMAINS[k];
            (
                parzen::Parzen::fit(&cont_of(good, k), lo, hi),
                parzen::Parzen::fit(&cont_of(bad, k), lo, hi),
            )
        })
        .collect();
    let cat_models: Vec<(Vec<f64>, Vec<f64>)> = (0..4)
        .map(|k| {
            let size = CATEGORICAL_SIZES[k].1;
            (
                parzen::categorical(&cat_of(good, k), size),
                parzen::categorical(&cat_of(bad, k), size),
            )
        })
        .collect();

    let mut best: Option<(f64, [f64; 7], [usize; 4])> = None;
    for _ in 0..settings.n_candidates.max(1) {
        let mut score = 0.0;
        let cont: [f64; 7] = std::array::from_fn(|k| {
            let (l, g) = &cont_models[k];
            let x = l.sample(rng);
            score += l.log_pdf(x) - g.log_pdf(x);
            x
        });
        let cat: [usize; 4] = if space.continuous_only {
            [0; 4]
        } else {
            std::array::from_fn(|k| {
                let (l, g) = &cat_models[k];
                let c = parzen::sample_categorical(l, rng);
                score += l[c].ln() - g[c].ln();
                c
            })
        };
        if best.as_ref().is_none_or(|(s, ..)| score > *s) {
            best = Some((score, cont, cat));
        }
    }
    let (_, cont, cat) = best.expect("at least one candidate");
    space.to_config(cont, cat)
}

/// Minimize `objective` over `budget` trials. The objective receives the trial index
/// and the proposed configuration.
pub fn tpe_optimize<F>(
    mut objective: F,
    space: SearchSpace,
    budget: usize,
    settings: &TpeSettings,
    seed: u64,
) -> Result<TrialHistory>
where
    F: FnMut(usize, &Configuration) -> Result<f64>,
{
    if budget < settings.n_startup {
        return Err(Error::param(format!(
            "TPE budget {budget} is below the {} startup trials",
            settings.n_startup
        )));
    }
    if !(settings.gamma > 0.0 && settings.gamma < 1.0) {
        return Err(Error::param("gamma must lie in (0, 1)"));
    }
    let mut rng = seed::rng(crate::seed_path!(seed, "tpe"));
    let mut history = TrialHistory::default();
    for t in 0..budget {
        let config = propose(&history, space, settings, &mut rng);
        let score = objective(t, &config)?;
        if !score.is_finite() {
            return Err(Error::param(format!("objective returned {score} at trial {t}")));
        }
        history.trials.push(Trial {
            config,
            score,
            final_best: score,
        });
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmaes::Mirrored;

    #[test]
    fn proposals_stay_in_domain() {
        let h = tpe_optimize(
            |_, c| Ok(c.sigma0 + c.lambda as f64 / 50.0),
            SearchSpace::full(),
            60,
            &TpeSettings::default(),
            3,
        )
        .unwrap();
        assert_eq!(h.len(), 60);
        for t in &h.trials {
            t.config.validate().unwrap();
        }
    }

    #[test]
    fn startup_only_is_random_search() {
        let s = TpeSettings::default();
        let obj = |_: usize, c: &Configuration| Ok((c.sigma0 - 0.3).powi(2));
        let a = tpe_optimize(obj, SearchSpace::full(), 20, &s, 8).unwrap();
        let mut rng = seed::rng(crate::seed_path!(8, "tpe"));
        let random: Vec<Configuration> = (0..20).map(|_| SearchSpace::full().uniform(&mut rng)).collect();
        let configs: Vec<Configuration> = a.trials.iter().map(|t| t.config.clone()).collect();
        assert_eq!(configs, random);
        assert!(tpe_optimize(obj, SearchSpace::full(), 19, &s, 8).is_err());
    }

    #[test]
    fn continuous_space_freezes_categoricals() {
        let h = tpe_optimize(
            |_, c| Ok(c.parent_ratio),
            SearchSpace::continuous(),
            40,
            &TpeSettings::default(),
            1,
        )
        .unwrap();
        for t in &h.trials {
            assert_eq!(t.config.categorical_indices(), [0, 0, 0, 0]);
        }
    }

    #[test]
    fn concentrates_on_rewarded_category() {
        let h = tpe_optimize(
            |_, c| Ok(if c.mirrored == Mirrored::Mirrored { 0.0 } else { 1.0 }),
            SearchSpace::full(),
            100,
            &TpeSettings::default(),
            4,
        )
        .unwrap();
        let hits = h.trials[80..].iter().filter(|t| t.config.mirrored == Mirrored::Mirrored).count();
        assert!(hits >= 14, "{hits}/20");
    }
}
