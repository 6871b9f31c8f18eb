use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BinaryOp, ExprTree, Node, Protection, UnaryOp};
use crate::error::{Error, Result};
use crate::problems::ObjectiveFunction;
use crate::seed;

pub const MAX_GENERATION_ATTEMPTS: usize = 100;

/// Parameters of the grow-style tree generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RgfGenParams {
    pub max_depth: usize,
    /// Chance that an expansion above the depth limit picks an operator.
    pub p_operator: f64,
    /// Chance that an operand is a coordinate rather than a constant.
    pub p_coordinate: f64,
    pub constant_range: (f64, f64),
    pub seed: u64,
}

impl Default for RgfGenParams {
    fn default() -> Self {
        Self {
            max_depth: 6,
            p_operator: 0.7,
            p_coordinate: 0.6,
            constant_range: (-5.0, 5.0),
            seed: 0,
        }
    }
}

impl RgfGenParams {
    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 2 {
            return Err(Error::param("max_depth must be at least 2"));
        }
        let open = |p: f64| p > 0.0 && p < 1.0;
        if !open(self.p_operator) || !open(self.p_coordinate) {
            return Err(Error::param("generator probabilities must lie in (0, 1)"));
        }
        let (lo, hi) = self.constant_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::param("constant_range must be a finite, non-empty interval"));
        }
        Ok(())
    }
}

fn grow(rng: &mut seed::Rng, params: &RgfGenParams, dimension: usize, depth: usize) -> Node {
    if depth < params.max_depth && rng.random::<f64>() < params.p_operator {
        let pick = rng.random_range(0..UnaryOp::ALL.len() + BinaryOp::ALL.len());
        if pick < BinaryOp::ALL.len() {
            let a = grow(rng, params, dimension, depth + 1);
            let b = grow(rng, params, dimension, depth + 1);
            Node::Binary(BinaryOp::ALL[pick], Box::new(a), Box::new(b))
        } else {
            let a = grow(rng, params, dimension, depth + 1);
            Node::Unary(UnaryOp::ALL[pick - BinaryOp::ALL.len()], Box::new(a))
        }
    } else if rng.random::<f64>() < params.p_coordinate {
        Node::Var(rng.random_range(0..dimension))
    } else {
        let (lo, hi) = params.constant_range;
        Node::Const(rng.random_range(lo..hi))
    }
}

/// Generate a tree that references at least one coordinate.
pub fn generate_tree(params: &RgfGenParams, dimension: usize) -> Result<ExprTree> {
    params.validate()?;
    if dimension == 0 {
        return Err(Error::param("dimension must be positive"));
    }
    let mut rng = seed::rng(crate::seed_path!(params.seed, "rgf"));
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let root = grow(&mut rng, params, dimension, 1);
        if root.has_coordinate() {
            return ExprTree::new(root, dimension);
        }
    }
    Err(Error::GenerationExhausted {
        attempts: MAX_GENERATION_ATTEMPTS,
    })
}

/// Generate a tree and wrap it as an objective with default protection.
pub fn generate_rgf(params: &RgfGenParams, dimension: usize) -> Result<ObjectiveFunction> {
    let tree = generate_tree(params, dimension)?;
    Ok(tree.into_objective(format!("rgf_s{}_d{dimension}", params.seed), Protection::default()))
}
