//! Modular CMA-ES: the standard (μ/μ_w, λ) evolution strategy with switchable
//! active update, mirrored sampling, threshold convergence and weight schemes.

mod config;
mod run;

pub use config::{
    default_config, learning_rates, mu_eff, recombination_weights, resolve_auto_rates, Configuration,
    LearningRates, Mirrored, Rate, WeightsScheme, CATEGORICAL_SIZES, CONTINUOUS_DOMAINS,
};
pub use run::{run, ConvergenceTrace};
