//! Shapley values of the black box's output: the KernelSHAP neighbourhood and
//! constrained kernel regression, plus the brute-force oracle it must agree with.
//!
//! Coalition values use the independence approximation
//! `v(Q) = mean over background rows b of f(z_e on Q, b elsewhere)`, where `f`
//! is `predict_proba` treated as a real-valued game.

mod exact;
mod kernel;
mod kmeans;

pub use exact::exact_shapley;
pub use kernel::{coalition_cloud, kernelshap_neighbourhood, kernelshap_solve, ShapleyProblem, SubsetSource};
pub use kmeans::{kmeans_background, KMeans};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{BlackBox, Dataset};

/// Largest feature count for which all `2^d` coalitions are enumerated.
pub const ENUMERATION_CAP: usize = 12;

/// Rows supplying values for the features outside a coalition.
#[derive(Debug, Clone, PartialEq)]
pub struct Background {
    rows: Vec<Vec<f64>>,
}

impl Background {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let d = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidInput("background needs at least one row".into()))?;
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("background rows differ in length".into()));
        }
        Ok(Background { rows })
    }

    pub fn from_dataset(data: &Dataset) -> Self {
        Background {
            rows: data.rows().to_vec(),
        }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }
}

/// Attribution vector plus the value of the empty coalition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyValues {
    pub phi: Vec<f64>,
    pub base_value: f64,
}

/// `(d - 1) / (C(d, s) * s * (d - s))`.
pub fn shapley_kernel_weight(d: usize, s: usize) -> Result<f64> {
    if d < 2 || s == 0 || s >= d {
        return Err(Error::InvalidInput(format!(
            "Shapley kernel weight is infinite or undefined for d = {d}, s = {s}; needs 1 <= s <= d - 1"
        )));
    }
    Ok((d - 1) as f64 / (binomial(d, s) * s as f64 * (d - s) as f64))
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

pub(crate) fn mask_of(bits: u64, d: usize) -> Vec<bool> {
    (0..d).map(|j| bits >> j & 1 == 1).collect()
}

/// Copies `z_e` on the coalition and `other` elsewhere.
pub(crate) fn hybrid_into(out: &mut [f64], z_e: &[f64], other: &[f64], mask: &[bool]) {
    for (j, slot) in out.iter_mut().enumerate() {
        *slot = if mask[j] { z_e[j] } else { other[j] };
    }
}

/// Mean black-box output over the background with the coalition clamped to `z_e`.
/// Sums in background order, so results do not depend on evaluation scheduling.
pub fn coalition_value(model: &dyn BlackBox, z_e: &[f64], mask: &[bool], background: &Background) -> f64 {
    let mut buf = vec![0.0; z_e.len()];
    let mut sum = 0.0;
    for row in background.rows() {
        hybrid_into(&mut buf, z_e, row, mask);
        sum += model.predict_proba(&buf);
    }
    sum / background.len() as f64
}

pub(crate) fn check_inputs(model: &dyn BlackBox, z_e: &[f64], background: &Background) -> Result<()> {
    let d = model.n_features();
    if z_e.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: z_e.len(),
        });
    }
    if background.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: background.dim(),
        });
    }
    Ok(())
}
