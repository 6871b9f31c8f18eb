use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::encode::{decode, encode, head_sizes, N_CONTINUOUS};
use super::network::Network;
use crate::cmaes::Configuration;
use crate::ela::{ElaVector, FeatureScaler};
use crate::error::{Error, Result};
use crate::par::Execution;
use crate::seed;

pub const MODEL_VERSION: &str = "nncfg-v1";
pub const MIN_GRID_ROWS: usize = 25;
const GRID_SPLITS: usize = 5;
const VALIDATION_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NnArchitecture {
    pub n_hidden: usize,
    pub hidden_size: usize,
    pub epochs: usize,
}

impl NnArchitecture {
    /// The full search grid, ordered by layers, then width, then epochs.
    pub fn grid() -> Vec<NnArchitecture> {
        let mut out = Vec::with_capacity(36);
        for n_hidden in [1, 2, 3] {
            for hidden_size in [16, 32, 64, 128] {
                for epochs in [100, 150, 200] {
                    out.push(NnArchitecture {
                        n_hidden,
                        hidden_size,
                        epochs,
                    });
                }
            }
        }
        out
    }

    fn hidden(&self) -> Vec<usize> {
        vec![self.hidden_size; self.n_hidden]
    }
}

/// Optimizer constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSettings {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            momentum: 0.9,
            batch_size: 32,
        }
    }
}

/// Scaled feature rows paired with encoded best configurations.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub continuous_only: bool,
}

impl LabeledDataset {
    pub fn from_configs(inputs: Vec<Vec<f64>>, configs: &[Configuration], continuous_only: bool) -> Result<Self> {
        if inputs.len() != configs.len() {
            return Err(Error::param("inputs and configurations differ in count"));
        }
        let targets = configs
            .iter()
            .map(|c| encode(c).map(|e| e.to_vec(continuous_only)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            inputs,
            targets,
            continuous_only,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    fn input_width(&self) -> usize {
        self.inputs.first().map_or(0, Vec::len)
    }

    fn subset(&self, idx: &[usize]) -> LabeledDataset {
        LabeledDataset {
            inputs: idx.iter().map(|&i| self.inputs[i].clone()).collect(),
            targets: idx.iter().map(|&i| self.targets[i].clone()).collect(),
            continuous_only: self.continuous_only,
        }
    }

    fn mean_loss(&self, net: &Network) -> f64 {
        let xs: Vec<&[f64]> = self.inputs.iter().map(Vec::as_slice).collect();
        let ts: Vec<&[f64]> = self.targets.iter().map(Vec::as_slice).collect();
        net.loss(&xs, &ts)
    }
}

/// Output biases under which a network with silent hidden units predicts the target
/// means and the (smoothed) log class frequencies, so short training runs start from
/// the label prior instead of an arbitrary point.
fn prior_bias(data: &LabeledDataset) -> Vec<f64> {
    let n = data.len() as f64;
    let width = data.targets[0].len();
    let mut mean = vec![0.0; width];
    for t in &data.targets {
        mean.iter_mut().zip(t).for_each(|(m, v)| *m += v / n);
    }
    let mut offset = N_CONTINUOUS;
    for size in head_sizes(data.continuous_only) {
        for k in offset..offset + size {
            let count = mean[k] * n;
            mean[k] = ((count + 1.0) / (n + size as f64)).ln();
        }
        offset += size;
    }
    mean
}

/// Train a network with mini-batch SGD and momentum. Deterministic given `seed`.
pub fn train_network(data: &LabeledDataset, arch: &NnArchitecture, settings: &TrainSettings, seed: u64) -> Result<Network> {
    if data.is_empty() {
        return Err(Error::param("cannot train on an empty dataset"));
    }
    if settings.batch_size == 0 {
        return Err(Error::param("batch size must be positive"));
    }
    let mut net = Network::new(
        data.input_width(),
        &arch.hidden(),
        N_CONTINUOUS,
        &head_sizes(data.continuous_only),
        seed,
    );
    net.set_output_bias(&prior_bias(data));
    let mut velocity = vec![0.0; net.n_params()];
    let mut rng = seed::rng(crate::seed_path!(seed, "shuffle"));
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..arch.epochs {
        order.shuffle(&mut rng);
        for (batch, chunk) in order.chunks(settings.batch_size).enumerate() {
            let xs: Vec<&[f64]> = chunk.iter().map(|&i| data.inputs[i].as_slice()).collect();
            let ts: Vec<&[f64]> = chunk.iter().map(|&i| data.targets[i].as_slice()).collect();
            let (loss, grad) = net.loss_and_gradient(&xs, &ts);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::TrainingDiverged { epoch, batch });
            }
            for ((p, v), g) in net.params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = settings.momentum * *v - settings.learning_rate * g;
                *p += *v;
            }
        }
    }
    Ok(net)
}

/// Mean validation loss of every grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub best: NnArchitecture,
    pub best_loss: f64,
    pub losses: Vec<(NnArchitecture, f64)>,
}

/// Pick the architecture with the lowest mean validation loss over five seeded
/// 80:20 splits. Exact ties favour fewer layers, then smaller width, then fewer epochs.
pub fn grid_search(
    data: &LabeledDataset,
    grid: &[NnArchitecture],
    settings: &TrainSettings,
    seed: u64,
    exec: Execution,
) -> Result<GridSearchResult> {
    if data.len() < MIN_GRID_ROWS {
        return Err(Error::param(format!(
            "grid search needs at least {MIN_GRID_ROWS} rows, got {}",
            data.len()
        )));
    }
    if grid.is_empty() {
        return Err(Error::param("empty architecture grid"));
    }
    let n_val = ((data.len() as f64 * VALIDATION_FRACTION).round() as usize).max(1);
    let splits: Vec<(LabeledDataset, LabeledDataset)> = (0..GRID_SPLITS)
        .map(|s| {
            let mut idx: Vec<usize> = (0..data.len()).collect();
            idx.shuffle(&mut seed::rng(crate::seed_path!(seed, "split", s)));
            let (val, tr) = idx.split_at(n_val);
            (data.subset(tr), data.subset(val))
        })
        .collect();
    let jobs = grid.len() * GRID_SPLITS;
    let losses = exec.try_map(jobs, |j| {
        let (cell, s) = (j / GRID_SPLITS, j % GRID_SPLITS);
        let (tr, val) = &splits[s];
        let net = train_network(tr, &grid[cell], settings, crate::seed_path!(seed, "cell", cell, s))?;
        Ok::<f64, Error>(val.mean_loss(&net))
    })?;
    let mut cells: Vec<(NnArchitecture, f64)> = grid
        .iter()
        .enumerate()
        .map(|(c, a)| (*a, losses[c * GRID_SPLITS..(c + 1) * GRID_SPLITS].iter().sum::<f64>() / GRID_SPLITS as f64))
        .collect();
    let (best, best_loss) = *cells
        .iter()
        .min_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then(a.0.n_hidden.cmp(&b.0.n_hidden))
                .then(a.0.hidden_size.cmp(&b.0.hidden_size))
                .then(a.0.epochs.cmp(&b.0.epochs))
        })
        .expect("non-empty grid");
    cells.shrink_to_fit();
    Ok(GridSearchResult {
        best,
        best_loss,
        losses: cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `rows × cols` (outputs × inputs).
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Serialized form of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelDocument {
    version: String,
    architecture: NnArchitecture,
    features: Vec<String>,
    scaler: FeatureScaler,
    continuous_only: bool,
    heads: Vec<usize>,
    layers: Vec<LayerParams>,
}

/// A trained configuration predictor, bundled with the feature scaler it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct NnModel {
    pub architecture: NnArchitecture,
    pub scaler: FeatureScaler,
    pub network: Network,
    pub continuous_only: bool,
}

/// Train the final model on the whole dataset.
pub fn train(
    data: &LabeledDataset,
    arch: &NnArchitecture,
    scaler: FeatureScaler,
    settings: &TrainSettings,
    seed: u64,
) -> Result<NnModel> {
    if scaler.width() != data.input_width() {
        return Err(Error::param("scaler width does not match the dataset"));
    }
    Ok(NnModel {
        architecture: *arch,
        network: train_network(data, arch, settings, seed)?,
        scaler,
        continuous_only: data.continuous_only,
    })
}

impl NnModel {
    /// Predict a configuration for a raw (unscaled) feature vector.
    pub fn predict(&self, ela: &ElaVector) -> Result<Configuration> {
        let scaled = self.scaler.apply(ela)?;
        Ok(decode(&self.network.forward(scaled.values())))
    }

    fn to_document(&self) -> ModelDocument {
        let net = &self.network;
        let mut layers = Vec::new();
        let mut off = 0;
        for w in net.sizes.windows(2) {
            let (cols, rows) = (w[0], w[1]);
            layers.push(LayerParams {
                rows,
                cols,
                weights: net.params[off..off + rows * cols].to_vec(),
                biases: net.params[off + rows * cols..off + rows * cols + rows].to_vec(),
            });
            off += rows * cols + rows;
        }
        ModelDocument {
            version: MODEL_VERSION.to_string(),
            architecture: self.architecture,
            features: self.scaler.kept.clone(),
            scaler: self.scaler.clone(),
            continuous_only: self.continuous_only,
            heads: net.heads.clone(),
            layers,
        }
    }

    fn from_document(doc: ModelDocument) -> Result<Self> {
        if doc.version != MODEL_VERSION {
            return Err(Error::param(format!("unsupported model version '{}'", doc.version)));
        }
        if doc.layers.is_empty() || doc.features != doc.scaler.kept {
            return Err(Error::param("inconsistent model document"));
        }
        let mut sizes = vec![doc.layers[0].cols];
        let mut params = Vec::new();
        for (i, l) in doc.layers.iter().enumerate() {
            if l.cols != *sizes.last().unwrap() || l.weights.len() != l.rows * l.cols || l.biases.len() != l.rows {
                return Err(Error::param(format!("layer {i} has inconsistent shape")));
            }
            sizes.push(l.rows);
            params.extend_from_slice(&l.weights);
            params.extend_from_slice(&l.biases);
        }
        if sizes[0] != doc.scaler.width() || *sizes.last().unwrap() != N_CONTINUOUS + doc.heads.iter().sum::<usize>() {
            return Err(Error::param("model widths do not match its features and heads"));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::param("model has non-finite parameters"));
        }
        Ok(NnModel {
            architecture: doc.architecture,
            scaler: doc.scaler,
            network: Network {
                sizes,
                n_regression: N_CONTINUOUS,
                heads: doc.heads,
                params,
            },
            continuous_only: doc.continuous_only,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_document(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
