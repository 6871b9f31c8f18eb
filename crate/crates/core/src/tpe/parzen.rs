//! One-dimensional truncated-Gaussian Parzen densities and smoothed categorical models.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::erf::erf;

use crate::seed;

/// Bandwidths never fall below this fraction of the domain width.
const MIN_BANDWIDTH: f64 = 0.01;
const SAMPLE_ATTEMPTS: usize = 100;

fn std_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// Equally weighted mixture of Gaussians truncated to `[lo, hi]`: one kernel per
/// observation plus a broad prior kernel at the domain centre.
#[derive(Debug, Clone)]
pub(super) struct Parzen {
    lo: f64,
    hi: f64,
    mus: Vec<f64>,
    sigmas: Vec<f64>,
    /// Probability mass of each kernel inside the domain.
    masses: Vec<f64>,
}

impl Parzen {
    pub(super) fn fit(obs: &[f64], lo: f64, hi: f64) -> Self {
        let width = hi - lo;
        let mut sorted = obs.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut mus = Vec::with_capacity(obs.len() + 1);
        let mut sigmas = Vec::with_capacity(obs.len() + 1);
        for (i, &x) in sorted.iter().enumerate() {
            let left = if i > 0 { x - sorted[i - 1] } else { f64::INFINITY };
            let right = sorted.get(i + 1).map_or(f64::INFINITY, |r| r - x);
            let nearest = left.min(right);
            let bw = if nearest.is_finite() { nearest } else { width };
            mus.push(x);
            sigmas.push(bw.clamp(MIN_BANDWIDTH * width, width));
        }
        mus.push(0.5 * (lo + hi));
        sigmas.push(width);
        let masses = mus
            .iter()
            .zip(&sigmas)
            .map(|(m, s)| (std_cdf((hi - m) / s) - std_cdf((lo - m) / s)).max(1e-300))
            .collect();
        Self { lo, hi, mus, sigmas, masses }
    }

    pub(super) fn sample(&self, rng: &mut seed::Rng) -> f64 {
        let k = rng.random_range(0..self.mus.len());
        for _ in 0..SAMPLE_ATTEMPTS {
            let z: f64 = rng.sample(StandardNormal);
            let x = self.mus[k] + self.sigmas[k] * z;
            if x >= self.lo && x <= self.hi {
                return x;
            }
        }
        self.mus[k].clamp(self.lo, self.hi)
    }

    pub(super) fn log_pdf(&self, x: f64) -> f64 {
        let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * self.mus.len() as f64);
        let density: f64 = self
            .mus
            .iter()
            .zip(&self.sigmas)
            .zip(&self.masses)
            .map(|((m, s), mass)| {
                let z = (x - m) / s;
                (-0.5 * z * z).exp() / (s * mass)
            })
            .sum::<f64>()
            * norm;
        density.max(1e-300).ln()
    }
}

/// Category probabilities with a pseudo-count of one per category.
pub(super) fn categorical(obs: &[usize], size: usize) -> Vec<f64> {
    let mut counts = vec![1.0; size];
    for &c in obs {
        counts[c] += 1.0;
    }
    let total = (obs.len() + size) as f64;
    counts.into_iter().map(|c| c / total).collect()
}

pub(super) fn sample_categorical(probs: &[f64], rng: &mut seed::Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_integrates_to_one() {
        let p = Parzen::fit(&[0.12, 0.15, 0.4, 0.41, 0.49], 0.1, 0.5);
        let n = 20_000;
        let h = 0.4 / n as f64;
        let integral: f64 = (0..n).map(|i| p.log_pdf(0.1 + (i as f64 + 0.5) * h).exp() * h).sum();
        assert!((integral - 1.0).abs() < 1e-3, "{integral}");
    }

    #[test]
    fn samples_in_domain_and_categorical_smoothing() {
        let p = Parzen::fit(&[5.0, 5.0, 50.0], 5.0, 50.0);
        let mut rng = seed::rng(1);
        for _ in 0..1000 {
            let x = p.sample(&mut rng);
            assert!((5.0..=50.0).contains(&x));
        }
        assert_eq!(categorical(&[1, 1], 3), vec![0.2, 0.6, 0.2]);
        assert_eq!(categorical(&[], 2), vec![0.5, 0.5]);
    }
}
