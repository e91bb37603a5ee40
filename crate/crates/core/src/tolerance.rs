use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stopping criteria shared by the iterative solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_iter: usize,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64, max_iter: usize) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(abs) || !ok(rel) || max_iter == 0 {
            return Err(Error::Domain(format!(
                "tolerance needs finite positive abs/rel and max_iter > 0, got ({abs}, {rel}, {max_iter})"
            )));
        }
        Ok(Self { abs, rel, max_iter })
    }

    /// Whether two values agree to `abs + rel * |scale|`.
    pub fn close(&self, a: f64, b: f64, scale: f64) -> bool {
        (a - b).abs() <= self.abs + self.rel * scale.abs()
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-15,
            rel: 4.0 * f64::EPSILON,
            max_iter: 200,
        }
    }
}
