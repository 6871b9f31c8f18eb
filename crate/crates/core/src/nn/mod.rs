//! The configuration predictor: target encoding, a dense multi-head network, its
//! training, architecture search and persistence.

mod encode;
mod network;
mod train;

pub use encode::{decode, encode, head_sizes, rescale, EncodedConfig, N_CONTINUOUS};
pub use network::{sample_loss, Network};
pub use train::{
    grid_search, train, train_network, GridSearchResult, LabeledDataset, LayerParams, NnArchitecture, NnModel,
    TrainSettings, MIN_GRID_ROWS, MODEL_VERSION,
};
