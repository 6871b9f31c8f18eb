//! Randomly generated functions: expression trees over coordinates, constants and
//! a fixed operator pool, evaluated with protected (total) semantics.

mod generate;
mod text;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::problems::{Landscape, ObjectiveFunction};

pub use generate::{generate_rgf, generate_tree, RgfGenParams, MAX_GENERATION_ATTEMPTS};
pub use text::{deserialize_tree, read_batch, serialize_tree, write_batch, BATCH_HEADER};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Square,
    Abs,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl UnaryOp {
    pub const ALL: [UnaryOp; 8] = [
        UnaryOp::Sin,
        UnaryOp::Cos,
        UnaryOp::Exp,
        UnaryOp::Log,
        UnaryOp::Sqrt,
        UnaryOp::Square,
        UnaryOp::Abs,
        UnaryOp::Neg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Sin => "sin",
            UnaryOp::Cos => "cos",
            UnaryOp::Exp => "exp",
            UnaryOp::Log => "log",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Square => "square",
            UnaryOp::Abs => "abs",
            UnaryOp::Neg => "neg",
        }
    }
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 4] = [BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div];

    pub fn name(self) -> &'static str {
        match self {
            BinaryOp::Add => "add",
            BinaryOp::Sub => "sub",
            BinaryOp::Mul => "mul",
            BinaryOp::Div => "div",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Var(usize),
    Const(f64),
    Unary(UnaryOp, Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
}

impl Node {
    pub fn depth(&self) -> usize {
        match self {
            Node::Var(_) | Node::Const(_) => 1,
            Node::Unary(_, a) => 1 + a.depth(),
            Node::Binary(_, a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Node::Var(_) | Node::Const(_) => 1,
            Node::Unary(_, a) => 1 + a.size(),
            Node::Binary(_, a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn has_coordinate(&self) -> bool {
        match self {
            Node::Var(_) => true,
            Node::Const(_) => false,
            Node::Unary(_, a) => a.has_coordinate(),
            Node::Binary(_, a, b) => a.has_coordinate() || b.has_coordinate(),
        }
    }

    fn max_coordinate(&self) -> Option<usize> {
        match self {
            Node::Var(i) => Some(*i),
            Node::Const(_) => None,
            Node::Unary(_, a) => a.max_coordinate(),
            Node::Binary(_, a, b) => a.max_coordinate().max(b.max_coordinate()),
        }
    }
}

/// Guard constants of the protected operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Protection {
    /// Divisors with magnitude at or below this return 1.
    pub div_guard: f64,
    /// Added to |a| before taking the logarithm.
    pub log_guard: f64,
    /// Upper cap on the argument of `exp`.
    pub exp_cap: f64,
    /// Every intermediate and final value is clamped to ±clamp.
    pub clamp: f64,
}

impl Default for Protection {
    fn default() -> Self {
        Self {
            div_guard: 1e-10,
            log_guard: 1e-10,
            exp_cap: 50.0,
            clamp: 1e12,
        }
    }
}

impl Protection {
    pub fn unary(&self, op: UnaryOp, a: f64) -> f64 {
        let v = match op {
            UnaryOp::Sin => a.sin(),
            UnaryOp::Cos => a.cos(),
            UnaryOp::Exp => a.min(self.exp_cap).exp(),
            UnaryOp::Log => (a.abs() + self.log_guard).ln(),
            UnaryOp::Sqrt => a.abs().sqrt(),
            UnaryOp::Square => a * a,
            UnaryOp::Abs => a.abs(),
            UnaryOp::Neg => -a,
        };
        v.clamp(-self.clamp, self.clamp)
    }

    pub fn binary(&self, op: BinaryOp, a: f64, b: f64) -> f64 {
        let v = match op {
            BinaryOp::Add => a + b,
            BinaryOp::Sub => a - b,
            BinaryOp::Mul => a * b,
            BinaryOp::Div => {
                if b.abs() > self.div_guard {
                    a / b
                } else {
                    1.0
                }
            }
        };
        v.clamp(-self.clamp, self.clamp)
    }
}

/// A generated function expression in `dimension` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprTree {
    root: Node,
    dimension: usize,
}

impl ExprTree {
    /// Fails if a coordinate index is out of range.
    pub fn new(root: Node, dimension: usize) -> crate::Result<Self> {
        if let Some(i) = root.max_coordinate() {
            if i >= dimension {
                return Err(crate::Error::param(format!(
                    "coordinate x{i} out of range for dimension {dimension}"
                )));
            }
        }
        Ok(Self { root, dimension })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        evaluate_tree(self, x, &Protection::default())
    }

    pub fn into_objective(self, id: impl Into<String>, protection: Protection) -> ObjectiveFunction {
        let d = self.dimension;
        ObjectiveFunction::new(id, d, RgfFunction { tree: self, protection })
    }
}

impl fmt::Display for ExprTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)
    }
}

/// Recursive protected evaluation.
///
/// # Panics
/// If `x` is shorter than the tree's dimension.
pub fn evaluate_tree(tree: &ExprTree, x: &[f64], protection: &Protection) -> f64 {
    assert_eq!(x.len(), tree.dimension, "point dimension mismatch");
    eval_node(&tree.root, x, protection)
}

fn eval_node(node: &Node, x: &[f64], p: &Protection) -> f64 {
    match node {
        Node::Var(i) => x[*i].clamp(-p.clamp, p.clamp),
        Node::Const(c) => c.clamp(-p.clamp, p.clamp),
        Node::Unary(op, a) => p.unary(*op, eval_node(a, x, p)),
        Node::Binary(op, a, b) => {
            let va = eval_node(a, x, p);
            let vb = eval_node(b, x, p);
            p.binary(*op, va, vb)
        }
    }
}

#[derive(Debug, Clone)]
pub struct RgfFunction {
    pub tree: ExprTree,
    pub protection: Protection,
}

impl Landscape for RgfFunction {
    fn eval(&self, x: &[f64]) -> f64 {
        evaluate_tree(&self.tree, x, &self.protection)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tree(text: &str, d: usize) -> ExprTree {
        deserialize_tree(text, d).unwrap()
    }

    #[test]
    fn direct_arithmetic() {
        assert_eq!(tree("(add x0 x1)", 2).evaluate(&[2.0, 3.0]), 5.0);
    }

    #[test]
    fn protected_division_returns_one() {
        let t = tree("(div x0 (mul 0 x1))", 2);
        for x in [[3.0, 1.0], [-4.5, 2.0], [0.0, 0.0]] {
            assert_eq!(t.evaluate(&x), 1.0);
        }
    }

    #[test]
    fn protected_unaries() {
        let p = Protection::default();
        assert_eq!(p.unary(UnaryOp::Exp, 20.0), 20f64.exp());
        assert_eq!(p.unary(UnaryOp::Exp, 1000.0), 1e12);
        let loose = Protection { clamp: 1e30, ..p };
        assert_eq!(loose.unary(UnaryOp::Exp, 1000.0), 50f64.exp());
        assert!(p.unary(UnaryOp::Log, 0.0).is_finite());
        assert_eq!(p.unary(UnaryOp::Sqrt, -4.0), 2.0);
        assert_eq!(p.unary(UnaryOp::Square, 1e10), 1e12);
    }

    #[test]
    fn coordinate_range_is_checked() {
        assert!(ExprTree::new(Node::Var(3), 3).is_err());
        assert!(ExprTree::new(Node::Var(2), 3).is_ok());
    }

    #[test]
    fn sin_of_square_at_zero() {
        let t = tree("(sin (mul x1 x1))", 2);
        assert_eq!(t.evaluate(&[4.0, 0.0]), 0.0);
    }
}
