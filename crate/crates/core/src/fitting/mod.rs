//! Nonlinear least squares: a damped Gauss-Newton (Levenberg-Marquardt)
//! engine with forward-difference Jacobians, plus the line-shape and decay
//! models used throughout the analyses.

mod engine;
mod models;

pub use engine::{fit, fit_from, FitOptions, FitResult};
pub use models::{
    exponential_decay, gaussian_line, hole_power_model, linear_model, lorentzian_peak, mims_decay_model,
    model_by_name, FitModel, MODEL_NAMES,
};

use crate::error::{ensure, Result};

/// Observations `y(x)` with optional per-point standard deviations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        Self::build(x, y, None)
    }

    pub fn weighted(x: Vec<f64>, y: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        Self::build(x, y, Some(sigma))
    }

    fn build(x: Vec<f64>, y: Vec<f64>, sigma: Option<Vec<f64>>) -> Result<Self> {
        ensure(x.len() == y.len(), "dataset", "x and y differ in length")?;
        ensure(
            x.iter().chain(&y).all(|v| v.is_finite()),
            "dataset",
            "x and y must be finite",
        )?;
        if let Some(s) = &sigma {
            ensure(s.len() == x.len(), "sigma", "sigma and x differ in length")?;
            ensure(
                s.iter().all(|&v| v > 0.0 && v.is_finite()),
                "sigma",
                "standard deviations must be positive",
            )?;
        }
        Ok(Self { x, y, sigma })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Weight of point `i` in the residual, `1/σᵢ` or 1.
    pub(crate) fn inv_sigma(&self, i: usize) -> f64 {
        self.sigma.as_ref().map_or(1.0, |s| 1.0 / s[i])
    }
}
