//! Landscape-aware automated configuration of a modular CMA-ES.
//!
//! The crate covers the whole training and testing workflow: problem suites
//! ([`problems`], [`rgf`]), landscape features ([`ela`]), the configurable
//! optimizer ([`cmaes`]), hyperparameter search ([`tpe`]), training-function
//! screening ([`selection`]), the configuration predictor ([`nn`]), evaluation
//! statistics ([`stats`]) and stage orchestration ([`pipeline`]).

pub mod error;
#[macro_use]
pub mod seed;
pub mod par;
pub mod problems;
pub mod rgf;
pub mod ela;
pub mod cmaes;
pub mod tpe;
pub mod selection;
pub mod stats;
pub mod nn;
pub mod pipeline;

pub use error::{Error, Result};
pub use par::Execution;
pub use problems::ObjectiveFunction;
