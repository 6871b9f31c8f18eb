//! Problem suite: the noiseless BBOB functions, their many-affine combinations,
//! and a common [`ObjectiveFunction`] handle used by every other module.

mod bbob;
mod mabbob;

use std::fmt;
use std::sync::Arc;

pub use bbob::{make_bbob, BbobFunction, BBOB_NAMES};
pub use mabbob::{make_mabbob, MaBbobFunction, MaBbobSpec, MABBOB_EPSILON};

/// Every suite function lives on this box, per coordinate.
pub const LOWER_BOUND: f64 = -5.0;
pub const UPPER_BOUND: f64 = 5.0;

/// Raw landscape behind an [`ObjectiveFunction`]. Implementations may assume the
/// point is already inside the bounds.
pub trait Landscape: Send + Sync + fmt::Debug {
    fn eval(&self, x: &[f64]) -> f64;
}

struct FnLandscape<F>(F);

impl<F> fmt::Debug for FnLandscape<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("FnLandscape")
    }
}

impl<F> Landscape for FnLandscape<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn eval(&self, x: &[f64]) -> f64 {
        (self.0)(x)
    }
}

/// A bounded, deterministic scalar function. Cheap to clone and safe to share
/// across threads.
#[derive(Clone)]
pub struct ObjectiveFunction {
    id: String,
    dimension: usize,
    lower: f64,
    upper: f64,
    known_optimum: Option<f64>,
    optimum_location: Option<Vec<f64>>,
    inner: Arc<dyn Landscape>,
}

impl fmt::Debug for ObjectiveFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveFunction")
            .field("id", &self.id)
            .field("dimension", &self.dimension)
            .field("known_optimum", &self.known_optimum)
            .finish()
    }
}

impl ObjectiveFunction {
    pub fn new(id: impl Into<String>, dimension: usize, landscape: impl Landscape + 'static) -> Self {
        Self {
            id: id.into(),
            dimension,
            lower: LOWER_BOUND,
            upper: UPPER_BOUND,
            known_optimum: None,
            optimum_location: None,
            inner: Arc::new(landscape),
        }
    }

    /// Wrap a closure, mostly useful for tests and ad-hoc problems.
    pub fn from_fn<F>(id: impl Into<String>, dimension: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self::new(id, dimension, FnLandscape(f))
    }

    pub fn with_known_optimum(mut self, f_opt: f64, location: Option<Vec<f64>>) -> Self {
        self.known_optimum = Some(f_opt);
        self.optimum_location = location;
        self
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower
    }

    pub fn upper_bound(&self) -> f64 {
        self.upper
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        vec![(self.lower, self.upper); self.dimension]
    }

    pub fn known_optimum(&self) -> Option<f64> {
        self.known_optimum
    }

    pub fn optimum_location(&self) -> Option<&[f64]> {
        self.optimum_location.as_deref()
    }

    /// Evaluate at `x`, clamping coordinates into the box first.
    ///
    /// # Panics
    /// If `x.len()` differs from the dimension.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dimension, "point dimension mismatch");
        if x.iter().all(|v| *v >= self.lower && *v <= self.upper) {
            self.inner.eval(x)
        } else {
            let clamped: Vec<f64> = x.iter().map(|v| v.clamp(self.lower, self.upper)).collect();
            self.inner.eval(&clamped)
        }
    }
}
