//! Interpretable models fitted on a neighbourhood.

mod linear;
mod tree;

pub use linear::{attribution_of, fit_weighted_ridge, LinearSurrogate, DEFAULT_LAMBDA};
pub use tree::{fit_tree, TreeNode, TreeSurrogate};

use crate::error::{Error, Result};

/// Checks shape and returns the weights rescaled to the given total.
pub(crate) fn normalized_weights(
    n: usize,
    d: usize,
    points: &[Vec<f64>],
    weights: Option<&[f64]>,
    total: f64,
) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidInput("cannot fit a surrogate on zero points".into()));
    }
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: p.len(),
        });
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("surrogate points must be finite".into()));
    }
    let w: Vec<f64> = match weights {
        Some(w) => {
            if w.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: w.len(),
                });
            }
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidInput("weights must be finite and nonnegative".into()));
            }
            w.to_vec()
        }
        None => vec![1.0; n],
    };
    let sum: f64 = w.iter().sum();
    if sum.is_nan() || sum <= 0.0 {
        return Err(Error::InvalidInput("weights sum to zero".into()));
    }
    Ok(w.iter().map(|x| x / sum * total).collect())
}
