use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::normalized_weights;
use crate::error::{Error, Result};

pub const DEFAULT_LAMBDA: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSurrogate {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LinearSurrogate {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }

    pub fn predict_label(&self, x: &[f64]) -> u8 {
        u8::from(self.predict(x) >= 0.5)
    }
}

/// Minimises `sum w_i (y_i - beta.x_i - b)^2 + lambda |beta|^2` with the
/// weights rescaled to sum to one, so the fit is invariant to weight scale.
/// Solved on weight-centred data; the intercept is not penalised.
pub fn fit_weighted_ridge(
    points: &[Vec<f64>],
    targets: &[f64],
    weights: Option<&[f64]>,
    lambda: f64,
) -> Result<LinearSurrogate> {
    let n = points.len();
    if targets.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: targets.len(),
        });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "ridge lambda must be nonnegative, got {lambda}"
        )));
    }
    if targets.iter().any(|y| !y.is_finite()) {
        return Err(Error::InvalidInput("ridge targets must be finite".into()));
    }
    let d = points.first().map(Vec::len).unwrap_or(0);
    let w = normalized_weights(n, d, points, weights, 1.0)?;

    let mut x_mean = vec![0.0; d];
    let mut y_mean = 0.0;
    for ((p, &y), &wi) in points.iter().zip(targets).zip(&w) {
        for (m, v) in x_mean.iter_mut().zip(p) {
            *m += wi * v;
        }
        y_mean += wi * y;
    }

    let mut gram = DMatrix::<f64>::zeros(d, d);
    let mut rhs = DVector::<f64>::zeros(d);
    let mut xc = vec![0.0; d];
    for ((p, &y), &wi) in points.iter().zip(targets).zip(&w) {
        if wi == 0.0 {
            continue;
        }
        for j in 0..d {
            xc[j] = p[j] - x_mean[j];
        }
        let yc = y - y_mean;
        for i in 0..d {
            rhs[i] += wi * xc[i] * yc;
            for j in 0..d {
                gram[(i, j)] += wi * xc[i] * xc[j];
            }
        }
    }
    for i in 0..d {
        gram[(i, i)] += lambda;
    }
    let singular = || Error::Singular(format!("ridge system is singular at lambda = {lambda}; raise lambda"));
    let scale = (0..d).map(|i| gram[(i, i)]).fold(0.0, f64::max);
    let chol = gram.cholesky().ok_or_else(singular)?;
    let l = chol.l_dirty();
    if (0..d).any(|i| l[(i, i)] * l[(i, i)] <= 1e-12 * scale) {
        return Err(singular());
    }
    let beta = chol.solve(&rhs);
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(singular());
    }
    let coefficients: Vec<f64> = beta.iter().copied().collect();
    let intercept = y_mean - coefficients.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
    Ok(LinearSurrogate {
        coefficients,
        intercept,
    })
}

pub fn attribution_of(surrogate: &LinearSurrogate) -> Vec<f64> {
    surrogate.coefficients.clone()
}
