use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::problems::ObjectiveFunction;
use crate::seed;

/// A design of experiments: sample points and their (normalized) objective values.
#[derive(Debug, Clone, PartialEq)]
pub struct Doe {
    pub x: Vec<Vec<f64>>,
    /// Objective values min-max scaled to [0, 1]; all zeros when degenerate.
    pub y: Vec<f64>,
    pub y_raw_min: f64,
    pub y_raw_max: f64,
    /// Constant (or non-finite) objective values; the function cannot be characterized.
    pub degenerate: bool,
}

impl Doe {
    /// Build from raw values, normalizing the objectives.
    pub fn from_raw(x: Vec<Vec<f64>>, y_raw: Vec<f64>) -> Self {
        let finite = y_raw.iter().all(|v| v.is_finite());
        let lo = y_raw.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = y_raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let degenerate = !finite || y_raw.is_empty() || hi <= lo;
        let y = if degenerate {
            vec![0.0; y_raw.len()]
        } else {
            y_raw.iter().map(|v| (v - lo) / (hi - lo)).collect()
        };
        Doe {
            x,
            y,
            y_raw_min: lo,
            y_raw_max: hi,
            degenerate,
        }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }
}

/// Latin hypercube sample of `n` points in the given per-coordinate bounds.
pub fn latin_hypercube(n: usize, bounds: &[(f64, f64)], rng: &mut seed::Rng) -> Vec<Vec<f64>> {
    let mut x = vec![vec![0.0; bounds.len()]; n];
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(rng);
        for (row, s) in x.iter_mut().zip(strata) {
            let u: f64 = rng.random();
            row[j] = lo + (s as f64 + u) / n as f64 * (hi - lo);
        }
    }
    x
}

/// Draw `samples_per_dim * d` Latin hypercube points and evaluate `f` on them.
pub fn sample_doe(f: &ObjectiveFunction, samples_per_dim: usize, seed: u64) -> Result<Doe> {
    if samples_per_dim < 10 {
        return Err(Error::param("samples_per_dim must be at least 10"));
    }
    let n = samples_per_dim * f.dimension();
    let mut rng = seed::rng(crate::seed_path!(seed, "doe"));
    let x = latin_hypercube(n, &f.bounds(), &mut rng);
    let y_raw = x.iter().map(|row| f.evaluate(row)).collect();
    Ok(Doe::from_raw(x, y_raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_bbob;

    #[test]
    fn space_filling() {
        let f = make_bbob(1, 5, 1).unwrap();
        let doe = sample_doe(&f, 50, 4).unwrap();
        assert_eq!(doe.len(), 250);
        for j in 0..5 {
            let col: Vec<f64> = doe.x.iter().map(|r| r[j]).collect();
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(lo < -4.8 && hi > 4.8);
            assert!(lo >= -5.0 && hi <= 5.0);
            // one point per stratum
            let mut strata: Vec<usize> = col.iter().map(|v| ((v + 5.0) / 10.0 * 250.0) as usize).collect();
            strata.sort_unstable();
            strata.dedup();
            assert_eq!(strata.len(), 250);
        }
    }

    #[test]
    fn constant_function_is_degenerate() {
        let f = ObjectiveFunction::from_fn("const", 3, |_| 4.0);
        let doe = sample_doe(&f, 10, 0).unwrap();
        assert!(doe.degenerate);
        assert!(doe.y.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sphere_normalizes_to_unit_interval() {
        let f = make_bbob(1, 2, 0).unwrap();
        let doe = sample_doe(&f, 50, 42).unwrap();
        let lo = doe.y.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = doe.y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(lo, 0.0);
        assert_eq!(hi, 1.0);
        assert!(doe.y_raw_max > doe.y_raw_min);
    }

    #[test]
    fn too_few_samples_rejected() {
        let f = make_bbob(1, 2, 0).unwrap();
        assert!(sample_doe(&f, 9, 0).is_err());
    }
}
