use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use super::FeatureMatrix;
use crate::{Error, Result};

/// Fitted linear model `y ≈ w·x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    /// Set when every column was constant and only the intercept was fitted.
    pub intercept_only: bool,
}

impl RidgeModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + crate::math::dot(&self.weights, x)
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Vec<f64> {
        (0..x.rows).map(|i| self.predict_row(x.row(i))).collect()
    }
}

/// Ridge regression on centred data, intercept unpenalised:
/// `w = (XcᵀXc + λI)⁻¹ Xcᵀ yc`, `b = ȳ − x̄·w`.
///
/// With `λ = 0` the system is solved through the SVD pseudo-inverse, which
/// gives the minimum-norm least-squares solution when `XᵀX` is singular.
pub fn ridge_fit(x: &FeatureMatrix, y: &[f64], lambda: f64) -> Result<RidgeModel> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidConfig("ridge penalty must be finite and non-negative".into()));
    }
    if y.len() != x.rows {
        return Err(Error::DimensionMismatch { expected: x.rows, actual: y.len() });
    }
    if x.rows < 2 {
        return Err(Error::InvalidConfig("ridge regression needs at least two rows".into()));
    }
    let (n, d) = (x.rows, x.cols);
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let (x_mean, _) = x.column_stats();

    let xc = DMatrix::from_fn(n, d, |i, j| x.get(i, j) - x_mean[j]);
    let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));

    let degenerate = xc.iter().all(|v| v.abs() <= 1e-300);
    if d == 0 || degenerate {
        return Ok(RidgeModel { weights: vec![0.0; d], intercept: y_mean, intercept_only: true });
    }

    let xt = xc.transpose();
    let mut gram = &xt * &xc;
    for j in 0..d {
        gram[(j, j)] += lambda;
    }
    let rhs = &xt * &yc;
    let chol = if lambda > 0.0 { gram.clone().cholesky() } else { None };
    let w = match chol {
        Some(ch) => ch.solve(&rhs),
        None => {
            let svd = gram.svd(true, true);
            let cutoff = svd.singular_values.max() * 1e-12 * d as f64;
            svd.solve(&rhs, cutoff).map_err(|e| Error::InvalidConfig(alloc::format!("pseudo-inverse failed: {e}")))?
        }
    };
    let weights: Vec<f64> = w.iter().copied().collect();
    if weights.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalBlowUp { step: 0 });
    }
    let intercept = y_mean - crate::math::dot(&x_mean, &weights);
    Ok(RidgeModel { weights, intercept, intercept_only: false })
}
