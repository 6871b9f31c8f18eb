use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::{effective_mu, learning_rates, recombination_weights, selectable, Configuration, Mirrored};
use crate::error::{Error, Result};
use crate::problems::ObjectiveFunction;
use crate::seed;

/// Threshold convergence: initial threshold as a fraction of the box diagonal, and decay exponent.
const THRESHOLD_T0: f64 = 0.2;
const THRESHOLD_DECAY: f64 = 0.5;
/// Smallest eigenvalue tolerated in the covariance matrix before it is repaired.
const MIN_EIGENVALUE: f64 = 1e-20;
/// Runs stop once the largest step standard deviation leaves this range.
const MIN_STEP: f64 = 1e-14;
const MAX_STEP: f64 = 1e8;

/// Best-so-far objective values, one entry per evaluation of the budget.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTrace {
    pub best_so_far: Vec<f64>,
    /// Evaluations actually spent; the remainder of the trace repeats the final value.
    pub evaluations_used: usize,
    /// How often the covariance matrix had to be repaired to stay positive definite.
    pub covariance_repairs: usize,
}

impl ConvergenceTrace {
    pub fn final_best(&self) -> f64 {
        *self.best_so_far.last().expect("traces are never empty")
    }

    pub fn budget(&self) -> usize {
        self.best_so_far.len()
    }

    /// Write as CSV with columns `eval_index,best_so_far` (1-based index).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["eval_index", "best_so_far"])?;
        for (i, v) in self.best_so_far.iter().enumerate() {
            w.write_record([(i + 1).to_string(), v.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Strategy constants derived once per run.
struct Strategy {
    lambda: usize,
    mu: usize,
    weights: Vec<f64>,
    /// Shape of the negative weights for the worst candidates (sums to 1); empty without active update.
    neg_weights: Vec<f64>,
    alpha_neg: f64,
    mu_eff: f64,
    c_sigma: f64,
    d_sigma: f64,
    c_c: f64,
    c_1: f64,
    c_mu: f64,
    chi_n: f64,
}

impl Strategy {
    fn new(cfg: &Configuration, d: usize) -> Self {
        let mu = effective_mu(cfg);
        let weights = recombination_weights(cfg.weights_scheme, mu);
        let rates = learning_rates(cfg, d);
        let df = d as f64;
        let me = rates.mu_eff;
        let (c_1, c_mu) = (rates.c_1, rates.c_mu);
        let n_neg = mu.min(selectable(cfg) - mu);
        let (neg_weights, alpha_neg) = if cfg.active && n_neg > 0 && c_mu > 0.0 {
            let shape = recombination_weights(cfg.weights_scheme, n_neg);
            let me_neg = super::config::mu_eff(&shape);
            let alpha = (1.0 + c_1 / c_mu)
                .min(1.0 + 2.0 * me_neg / (me + 2.0))
                .min((1.0 - c_1 - c_mu) / (df * c_mu))
                .max(0.0);
            (shape, alpha)
        } else {
            (Vec::new(), 0.0)
        };
        Strategy {
            lambda: cfg.lambda,
            mu,
            weights,
            neg_weights,
            alpha_neg,
            mu_eff: me,
            c_sigma: rates.c_sigma,
            d_sigma: 1.0 + 2.0 * (((me - 1.0) / (df + 1.0)).sqrt() - 1.0).max(0.0) + rates.c_sigma,
            c_c: rates.c_c,
            c_1,
            c_mu,
            chi_n: df.sqrt() * (1.0 - 1.0 / (4.0 * df) + 1.0 / (21.0 * df * df)),
        }
    }
}

/// Run the configured CMA-ES on `f` for exactly `budget` evaluations (or until the
/// search distribution degenerates). No restarts are performed.
pub fn run(f: &ObjectiveFunction, cfg: &Configuration, budget: usize, seed: u64) -> Result<ConvergenceTrace> {
    cfg.validate()?;
    if budget < cfg.lambda {
        return Err(Error::param(format!(
            "budget {budget} is smaller than the population size {}",
            cfg.lambda
        )));
    }
    let d = f.dimension();
    let s = Strategy::new(cfg, d);
    let mut rng = seed::rng(crate::seed_path!(seed, "cmaes"));
    let (lb, ub) = (f.lower_bound(), f.upper_bound());
    let diagonal = (ub - lb) * (d as f64).sqrt();
    let mirrored = cfg.mirrored != Mirrored::None;
    let pairwise = cfg.mirrored == Mirrored::MirroredPairwise;

    let mut m = DVector::from_fn(d, |_, _| rng.random_range(lb..ub));
    let mut sigma = cfg.sigma0 * (ub - lb);
    let mut c = DMatrix::<f64>::identity(d, d);
    let mut basis = DMatrix::<f64>::identity(d, d);
    let mut scales = DVector::<f64>::from_element(d, 1.0);
    let mut inv_sqrt = DMatrix::<f64>::identity(d, d);
    let mut p_sigma = DVector::<f64>::zeros(d);
    let mut p_c = DVector::<f64>::zeros(d);

    let mut trace = Vec::with_capacity(budget);
    let mut best = f64::INFINITY;
    let mut repairs = 0;
    let mut generation = 0i32;

    while trace.len() < budget {
        let mut ys: Vec<DVector<f64>> = Vec::with_capacity(s.lambda);
        for k in 0..s.lambda {
            let y = if mirrored && k % 2 == 1 {
                -&ys[k - 1]
            } else {
                let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
                &basis * z.component_mul(&scales)
            };
            ys.push(y);
        }
        if cfg.threshold_convergence {
            let remaining = (budget - trace.len()) as f64 / budget as f64;
            let t = THRESHOLD_T0 * diagonal * remaining.powf(THRESHOLD_DECAY);
            for y in &mut ys {
                let len = sigma * y.norm();
                if len > 0.0 && len < t {
                    *y *= (2.0 * t - len) / len;
                }
            }
        }

        let n_eval = s.lambda.min(budget - trace.len());
        let mut fs = Vec::with_capacity(n_eval);
        let mut outside = Vec::with_capacity(n_eval);
        for y in ys.iter().take(n_eval) {
            let x = &m + sigma * y;
            let fx = f.evaluate(x.as_slice());
            let fx = if fx.is_nan() { f64::INFINITY } else { fx };
            best = best.min(fx);
            trace.push(best);
            fs.push(fx);
            outside.push(x.iter().map(|v| (v - v.clamp(lb, ub)).powi(2)).sum::<f64>());
        }
        if n_eval < s.lambda {
            break;
        }
        generation += 1;

        // Clamped evaluation makes the landscape flat outside the box; rank with a
        // distance penalty so the mean is not left to drift out there.
        let finite = fs.iter().copied().filter(|v| v.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let spread = if hi > lo { hi - lo } else { 1.0 };
        let gamma = spread / (sigma * sigma * d as f64);
        let fs: Vec<f64> = fs.iter().zip(&outside).map(|(v, o)| v + gamma * o).collect();

        let mut ranked: Vec<usize> = if pairwise {
            (0..s.lambda)
                .step_by(2)
                .map(|k| if k + 1 < s.lambda && fs[k + 1] < fs[k] { k + 1 } else { k })
                .collect()
        } else {
            (0..s.lambda).collect()
        };
        ranked.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]).then(a.cmp(&b)));

        let mut y_w = DVector::<f64>::zeros(d);
        for (w, &i) in s.weights.iter().zip(&ranked[..s.mu]) {
            y_w.axpy(*w, &ys[i], 1.0);
        }
        m.axpy(sigma, &y_w, 1.0);

        p_sigma = (1.0 - s.c_sigma) * &p_sigma + (s.c_sigma * (2.0 - s.c_sigma) * s.mu_eff).sqrt() * (&inv_sqrt * &y_w);
        let h_sigma = if s.c_sigma > 0.0 {
            let norm = p_sigma.norm() / (1.0 - (1.0 - s.c_sigma).powi(2 * generation)).sqrt();
            norm < (1.4 + 2.0 / (d as f64 + 1.0)) * s.chi_n
        } else {
            true
        };
        let h = if h_sigma { 1.0 } else { 0.0 };
        p_c = (1.0 - s.c_c) * &p_c + h * (s.c_c * (2.0 - s.c_c) * s.mu_eff).sqrt() * &y_w;
        let delta = (1.0 - h) * s.c_c * (2.0 - s.c_c);

        let mut rank_mu = DMatrix::<f64>::zeros(d, d);
        let mut weight_sum = 0.0;
        for (w, &i) in s.weights.iter().zip(&ranked[..s.mu]) {
            rank_mu.ger(*w, &ys[i], &ys[i], 1.0);
            weight_sum += w;
        }
        for (j, shape) in s.neg_weights.iter().enumerate() {
            let y = &ys[ranked[ranked.len() - 1 - j]];
            let w = -s.alpha_neg * shape;
            let mahalanobis = (&inv_sqrt * y).norm_squared();
            if mahalanobis > 0.0 {
                rank_mu.ger(w * d as f64 / mahalanobis, y, y, 1.0);
            }
            weight_sum += w;
        }
        let decay = 1.0 + s.c_1 * delta - s.c_1 - s.c_mu * weight_sum;
        c = decay * &c + s.c_1 * &p_c * p_c.transpose() + s.c_mu * rank_mu;

        let exponent = (s.c_sigma / s.d_sigma) * (p_sigma.norm() / s.chi_n - 1.0);
        sigma *= exponent.min(1.0).exp();

        c = 0.5 * (&c + c.transpose());
        if c.iter().any(|v| !v.is_finite()) || !sigma.is_finite() {
            log::debug!("{}: covariance degenerated after {} evaluations", f.id(), trace.len());
            break;
        }
        let eig = SymmetricEigen::new(c.clone());
        let mut values = eig.eigenvalues;
        if values.iter().any(|v| *v < MIN_EIGENVALUE) {
            repairs += 1;
            log::warn!(
                "{}: covariance lost positive definiteness (min eigenvalue {:e}); repair #{repairs}",
                f.id(),
                values.min()
            );
            values.apply(|v| *v = v.max(MIN_EIGENVALUE));
            c = &eig.eigenvectors * DMatrix::from_diagonal(&values) * eig.eigenvectors.transpose();
        }
        basis = eig.eigenvectors;
        scales = values.map(f64::sqrt);
        inv_sqrt = &basis * DMatrix::from_diagonal(&scales.map(|v| 1.0 / v)) * basis.transpose();

        let step = sigma * scales.max();
        if !(MIN_STEP..=MAX_STEP).contains(&step) || m.iter().any(|v| !v.is_finite()) {
            log::debug!("{}: step size {step:e} out of range; stopping", f.id());
            break;
        }
    }

    let used = trace.len();
    trace.resize(budget, best);
    Ok(ConvergenceTrace {
        best_so_far: trace,
        evaluations_used: used,
        covariance_repairs: repairs,
    })
}
