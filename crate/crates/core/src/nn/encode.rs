//! Configuration <-> network target vectors.
//!
//! The seven numeric hyperparameters are mapped linearly from their domains onto
//! [0, 1]; each categorical one becomes a one-hot block.

use crate::cmaes::{default_config, Configuration, CATEGORICAL_SIZES, CONTINUOUS_DOMAINS};
use crate::error::{Error, Result};

pub const N_CONTINUOUS: usize = 7;

/// Linear re-scaling of `a` from `[a_min, a_max]` to `[b_min, b_max]`.
pub fn rescale(a: f64, a_min: f64, a_max: f64, b_min: f64, b_max: f64) -> f64 {
    b_min + (a - a_min) * (b_max - b_min) / (a_max - a_min)
}

/// Encoded form of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedConfig {
    pub continuous: [f64; N_CONTINUOUS],
    /// One-hot blocks of sizes 2, 3, 2, 3.
    pub categorical: Vec<Vec<f64>>,
}

impl EncodedConfig {
    /// Flatten to a target vector; categorical blocks are left out in continuous-only mode.
    pub fn to_vec(&self, continuous_only: bool) -> Vec<f64> {
        let mut v = self.continuous.to_vec();
        if !continuous_only {
            for block in &self.categorical {
                v.extend_from_slice(block);
            }
        }
        v
    }
}

/// Sizes of the categorical output heads.
pub fn head_sizes(continuous_only: bool) -> Vec<usize> {
    if continuous_only {
        Vec::new()
    } else {
        CATEGORICAL_SIZES.iter().map(|(_, n)| *n).collect()
    }
}

pub fn encode(cfg: &Configuration) -> Result<EncodedConfig> {
    cfg.validate()?;
    let values = cfg
        .continuous_values()
        .ok_or_else(|| Error::param("cannot encode a configuration with automatic learning rates"))?;
    let continuous = std::array::from_fn(|i| {
        let (_, lo, hi) = CONTINUOUS_DOMAINS[i];
        rescale(values[i], lo, hi, 0.0, 1.0)
    });
    let categorical = cfg
        .categorical_indices()
        .iter()
        .zip(CATEGORICAL_SIZES)
        .map(|(&idx, (_, size))| (0..size).map(|k| if k == idx { 1.0 } else { 0.0 }).collect())
        .collect();
    Ok(EncodedConfig {
        continuous,
        categorical,
    })
}

/// First index of the largest entry.
fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Map a raw network output back to a valid configuration.
///
/// Numeric values are mapped back to their domains and clamped, λ is rounded, and each
/// categorical block is decoded by argmax (ties go to the lowest index). Without
/// categorical blocks the categorical hyperparameters take their defaults.
///
/// # Panics
/// If `raw` has fewer than seven entries, or has categorical entries of the wrong total width.
pub fn decode(raw: &[f64]) -> Configuration {
    assert!(raw.len() >= N_CONTINUOUS, "output too short to decode");
    let cont: [f64; N_CONTINUOUS] = std::array::from_fn(|i| {
        let (_, lo, hi) = CONTINUOUS_DOMAINS[i];
        rescale(raw[i], 0.0, 1.0, lo, hi)
    });
    let base = default_config(2).with_continuous(cont);
    let rest = &raw[N_CONTINUOUS..];
    if rest.is_empty() {
        return base;
    }
    let sizes = head_sizes(false);
    assert_eq!(rest.len(), sizes.iter().sum::<usize>(), "categorical block width mismatch");
    let mut idx = [0usize; 4];
    let mut offset = 0;
    for (k, size) in sizes.iter().enumerate() {
        idx[k] = argmax(&rest[offset..offset + size]);
        offset += size;
    }
    base.with_categorical(idx)
}
