//! Many-affine combinations of BBOB functions.
//!
//! `f(x) = exp(Σ w_i ln(s_i (f_i(x - x_new + x_opt_i) - f_opt_i) + ε)) - ε`
//!
//! The per-component scale `s_i` is the reciprocal median precision over a
//! seeded uniform sample, so every component contributes on a comparable log scale.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::bbob::BbobFunction;
use super::{Landscape, ObjectiveFunction, LOWER_BOUND, UPPER_BOUND};
use crate::error::{Error, Result};
use crate::seed;

pub const MABBOB_EPSILON: f64 = 1e-8;
const SCALE_SAMPLES: usize = 1000;
const OPTIMUM_RANGE: f64 = 4.0;

/// Serializable description of one many-affine function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaBbobSpec {
    pub weights: Vec<f64>,
    #[serde(rename = "x_new")]
    pub optimum_location: Vec<f64>,
    pub seed: u64,
}

impl MaBbobSpec {
    pub fn validate(&self) -> Result<()> {
        if self.weights.len() != 24 {
            return Err(Error::param(format!(
                "MA-BBOB needs 24 weights, got {}",
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::param("MA-BBOB weights must be finite and nonnegative"));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!("MA-BBOB weights sum to {sum}, not 1")));
        }
        if !self.weights.iter().any(|w| *w > 0.0) {
            return Err(Error::param("MA-BBOB needs at least one positive weight"));
        }
        if self
            .optimum_location
            .iter()
            .any(|v| !(v.abs() < OPTIMUM_RANGE))
        {
            return Err(Error::param("MA-BBOB optimum must lie strictly inside [-4, 4]^d"));
        }
        Ok(())
    }

    /// Seeded random spec: Dirichlet(1, …, 1) weights with every weight below the
    /// uniform share 1/24 truncated to zero, then renormalized.
    pub fn sample(dimension: usize, seed: u64) -> Self {
        let mut rng = seed::rng(crate::seed_path!(seed, "mabbob-spec"));
        let raw: Vec<f64> = (0..24).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = raw.iter().sum();
        let mut weights: Vec<f64> = raw
            .iter()
            .map(|w| w / total)
            .map(|w| if w < 1.0 / 24.0 { 0.0 } else { w })
            .collect();
        let kept: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= kept);
        let optimum_location = (0..dimension)
            .map(|_| rng.random_range(-OPTIMUM_RANGE * 0.999..OPTIMUM_RANGE * 0.999))
            .collect();
        Self {
            weights,
            optimum_location,
            seed,
        }
    }

    /// Spec concentrating all weight on one BBOB function.
    pub fn one_hot(fid: usize, optimum_location: Vec<f64>, seed: u64) -> Self {
        let mut weights = vec![0.0; 24];
        weights[fid - 1] = 1.0;
        Self {
            weights,
            optimum_location,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
struct Component {
    weight: f64,
    scale: f64,
    function: BbobFunction,
}

#[derive(Debug, Clone)]
pub struct MaBbobFunction {
    optimum_location: Vec<f64>,
    components: Vec<Component>,
}

impl MaBbobFunction {
    pub fn new(spec: &MaBbobSpec, dimension: usize) -> Result<Self> {
        spec.validate()?;
        if spec.optimum_location.len() != dimension {
            return Err(Error::param(format!(
                "x_new has length {}, expected {dimension}",
                spec.optimum_location.len()
            )));
        }
        let mut components = Vec::new();
        for (i, &weight) in spec.weights.iter().enumerate() {
            if weight <= 0.0 {
                continue;
            }
            let fid = i + 1;
            let function = BbobFunction::new(fid, dimension, crate::seed_path!(spec.seed, "mabbob-component", fid))?;
            let scale = component_scale(&function, crate::seed_path!(spec.seed, "mabbob-scale", fid));
            components.push(Component {
                weight,
                scale,
                function,
            });
        }
        Ok(Self {
            optimum_location: spec.optimum_location.clone(),
            components,
        })
    }

    /// Number of components with positive weight.
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Evaluate component `k` (in order of positive weights) at the shifted point, unscaled.
    pub fn component_value(&self, k: usize, x: &[f64]) -> f64 {
        let c = &self.components[k];
        let shifted = self.shift(x, c);
        c.function.eval_raw(&shifted)
    }

    fn shift(&self, x: &[f64], c: &Component) -> Vec<f64> {
        x.iter()
            .zip(&self.optimum_location)
            .zip(c.function.x_opt())
            .map(|((xi, xn), xo)| xi - xn + xo)
            .collect()
    }
}

fn component_scale(function: &BbobFunction, seed: u64) -> f64 {
    let mut rng = seed::rng(seed);
    let d = function.dimension();
    let mut precisions: Vec<f64> = (0..SCALE_SAMPLES)
        .map(|_| {
            let x: Vec<f64> = (0..d).map(|_| rng.random_range(LOWER_BOUND..UPPER_BOUND)).collect();
            function.eval_raw(&x) - function.f_opt()
        })
        .collect();
    precisions.sort_by(f64::total_cmp);
    let median = 0.5 * (precisions[SCALE_SAMPLES / 2 - 1] + precisions[SCALE_SAMPLES / 2]);
    if median > 0.0 && median.is_finite() {
        1.0 / median
    } else {
        1.0
    }
}

impl Landscape for MaBbobFunction {
    fn eval(&self, x: &[f64]) -> f64 {
        let mut log_sum = 0.0;
        for c in &self.components {
            let shifted = self.shift(x, c);
            let precision = (c.function.eval_raw(&shifted) - c.function.f_opt()).max(0.0);
            log_sum += c.weight * (c.scale * precision + MABBOB_EPSILON).ln();
        }
        log_sum.exp() - MABBOB_EPSILON
    }
}

/// Build the many-affine function described by `spec`. Its optimum value is 0 at `x_new`.
pub fn make_mabbob(spec: &MaBbobSpec, dimension: usize) -> Result<ObjectiveFunction> {
    let f = MaBbobFunction::new(spec, dimension)?;
    let loc = spec.optimum_location.clone();
    let id = format!("mabbob_s{}_d{dimension}", spec.seed);
    Ok(ObjectiveFunction::new(id, dimension, f).with_known_optimum(0.0, Some(loc)))
}
