//! Dense ReLU network with a linear regression head and softmax classification heads.
//!
//! Parameters live in one flat vector (per layer: row-major weights, then biases) so
//! optimizers and gradient checks can treat them uniformly.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    /// Layer widths from input to output; the output width is `n_regression + Σ heads`.
    pub sizes: Vec<usize>,
    pub n_regression: usize,
    pub heads: Vec<usize>,
    pub params: Vec<f64>,
}

/// Per-sample loss: mean squared error of the regression outputs plus the
/// cross-entropy of every classification head.
pub fn sample_loss(output: &[f64], target: &[f64], n_regression: usize) -> f64 {
    let mse = output[..n_regression]
        .iter()
        .zip(&target[..n_regression])
        .map(|(o, t)| (o - t).powi(2))
        .sum::<f64>()
        / n_regression as f64;
    let ce: f64 = output[n_regression..]
        .iter()
        .zip(&target[n_regression..])
        .map(|(p, t)| if *t > 0.0 { -t * p.max(1e-300).ln() } else { 0.0 })
        .sum();
    mse + ce
}

impl Network {
    /// He-uniform weights, zero biases.
    pub fn new(input: usize, hidden: &[usize], n_regression: usize, heads: &[usize], seed: u64) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(n_regression + heads.iter().sum::<usize>());
        let mut rng = seed::rng(crate::seed_path!(seed, "init"));
        let mut params = Vec::new();
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / fan_in.max(1) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-limit..=limit)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Self {
            sizes,
            n_regression,
            heads: heads.to_vec(),
            params,
        }
    }

    /// Overwrite the biases of the output layer.
    ///
    /// # Panics
    /// If `bias` does not match the output width.
    pub fn set_output_bias(&mut self, bias: &[f64]) {
        assert_eq!(bias.len(), self.output_width(), "output bias width mismatch");
        let n = self.params.len();
        self.params[n - bias.len()..].copy_from_slice(bias);
    }

    pub fn input_width(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_width(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn layer_offsets(&self) -> Vec<usize> {
        let mut offsets = vec![0];
        for w in self.sizes.windows(2) {
            offsets.push(offsets.last().unwrap() + w[0] * w[1] + w[1]);
        }
        offsets
    }

    /// Activations of every layer; the last entry holds the final outputs with
    /// softmax applied per head.
    fn activations(&self, x: &[f64]) -> Vec<Vec<f64>> {
        assert_eq!(x.len(), self.input_width(), "input width mismatch");
        let offsets = self.layer_offsets();
        let n_layers = self.sizes.len() - 1;
        let mut acts = vec![x.to_vec()];
        for l in 0..n_layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = &self.params[offsets[l]..offsets[l] + n_in * n_out];
            let b = &self.params[offsets[l] + n_in * n_out..offsets[l + 1]];
            let prev = &acts[l];
            let mut z: Vec<f64> = (0..n_out)
                .map(|o| b[o] + w[o * n_in..(o + 1) * n_in].iter().zip(prev).map(|(a, c)| a * c).sum::<f64>())
                .collect();
            if l + 1 < n_layers {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            } else {
                self.softmax_heads(&mut z);
            }
            acts.push(z);
        }
        acts
    }

    fn softmax_heads(&self, z: &mut [f64]) {
        let mut offset = self.n_regression;
        for &size in &self.heads {
            let block = &mut z[offset..offset + size];
            let max = block.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in block.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            block.iter_mut().for_each(|v| *v /= sum);
            offset += size;
        }
    }

    /// Regression outputs followed by one probability block per head.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.activations(x).pop().unwrap()
    }

    /// Mean loss over a batch.
    pub fn loss(&self, xs: &[&[f64]], ts: &[&[f64]]) -> f64 {
        xs.iter()
            .zip(ts)
            .map(|(x, t)| sample_loss(&self.forward(x), t, self.n_regression))
            .sum::<f64>()
            / xs.len() as f64
    }

    /// Mean loss over a batch and its gradient with respect to `params`.
    pub fn loss_and_gradient(&self, xs: &[&[f64]], ts: &[&[f64]]) -> (f64, Vec<f64>) {
        let offsets = self.layer_offsets();
        let n_layers = self.sizes.len() - 1;
        let mut grad = vec![0.0; self.params.len()];
        let mut total = 0.0;
        let scale = 1.0 / xs.len() as f64;
        for (x, t) in xs.iter().zip(ts) {
            let acts = self.activations(x);
            let out = &acts[n_layers];
            total += sample_loss(out, t, self.n_regression);
            // dL/dz at the output: MSE part for regression, p - t for softmax + CE
            let mut delta: Vec<f64> = out
                .iter()
                .zip(t.iter())
                .enumerate()
                .map(|(i, (o, tv))| {
                    if i < self.n_regression {
                        2.0 * (o - tv) / self.n_regression as f64
                    } else {
                        o - tv
                    }
                })
                .collect();
            for l in (0..n_layers).rev() {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let prev = &acts[l];
                let w_off = offsets[l];
                let b_off = w_off + n_in * n_out;
                for o in 0..n_out {
                    let d = delta[o] * scale;
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut grad[w_off + o * n_in..w_off + (o + 1) * n_in];
                    row.iter_mut().zip(prev).for_each(|(g, a)| *g += d * a);
                    grad[b_off + o] += d;
                }
                if l > 0 {
                    let w = &self.params[w_off..b_off];
                    delta = (0..n_in)
                        .map(|i| {
                            if prev[i] > 0.0 {
                                (0..n_out).map(|o| delta[o] * w[o * n_in + i]).sum()
                            } else {
                                0.0
                            }
                        })
                        .collect();
                }
            }
        }
        (total * scale, grad)
    }
}
