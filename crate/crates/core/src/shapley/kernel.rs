use std::collections::HashSet;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    binomial, check_inputs, coalition_value, hybrid_into, mask_of, shapley_kernel_weight, Background, ShapleyValues,
    ENUMERATION_CAP,
};
use crate::data::format_real;
use crate::error::{Error, Result};
use crate::seeded_rng;
use crate::types::{BlackBox, Instance, Neighbourhood, StrategyId};

/// Point cloud: for each background row and each proper non-empty coalition
/// `S`, the hybrid with `z_e` on `S`, weighted by the Shapley kernel.
pub fn kernelshap_neighbourhood(
    model: &dyn BlackBox,
    z_e: &Instance,
    background: &Background,
    seed: u64,
) -> Result<Neighbourhood> {
    check_inputs(model, z_e, background)?;
    let d = z_e.dim();
    if d < 2 {
        return Err(Error::InvalidInput("KernelSHAP needs at least two features".into()));
    }
    if d > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            d,
            cap: ENUMERATION_CAP,
        });
    }
    let masks: Vec<Vec<bool>> = (1..(1u64 << d) - 1).map(|b| mask_of(b, d)).collect();
    coalition_cloud(model, z_e, background, &masks, seed)
}

/// Hybrids of `z_e` with every background row for the given coalitions,
/// background-major, weighted by the Shapley kernel.
pub fn coalition_cloud(
    model: &dyn BlackBox,
    z_e: &[f64],
    background: &Background,
    masks: &[Vec<bool>],
    seed: u64,
) -> Result<Neighbourhood> {
    check_inputs(model, z_e, background)?;
    let d = z_e.len();
    let kernel = masks
        .iter()
        .map(|m| shapley_kernel_weight(d, m.iter().filter(|b| **b).count()))
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::with_capacity(background.len() * masks.len());
    let mut weights = Vec::with_capacity(points.capacity());
    for row in background.rows() {
        for (mask, &w) in masks.iter().zip(&kernel) {
            let mut p = vec![0.0; d];
            hybrid_into(&mut p, z_e, row, mask);
            points.push(p);
            weights.push(w);
        }
    }
    Neighbourhood::label(model, points, Some(weights), StrategyId::Kernelshap, seed)
}

/// Which coalitions enter the regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum SubsetSource {
    /// Every proper non-empty coalition.
    Full,
    /// `m` distinct coalitions drawn by kernel mass per size, uniformly within a size.
    Sampled { m: usize, seed: u64 },
}

/// Design rows (coalition masks), kernel weights and coalition values.
/// The empty and full coalitions are kept apart as exact constraints.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyProblem {
    pub masks: Vec<Vec<bool>>,
    pub weights: Vec<f64>,
    pub targets: Vec<f64>,
    pub base_value: f64,
    pub full_value: f64,
}

impl ShapleyProblem {
    pub fn build(model: &dyn BlackBox, z_e: &[f64], background: &Background, source: SubsetSource) -> Result<Self> {
        check_inputs(model, z_e, background)?;
        let d = z_e.len();
        let mut bits = match source {
            SubsetSource::Full => {
                if d > ENUMERATION_CAP {
                    return Err(Error::EnumerationCap {
                        d,
                        cap: ENUMERATION_CAP,
                    });
                }
                (1..(1u64 << d) - 1).collect()
            }
            SubsetSource::Sampled { m, seed } => sample_coalitions(d, m, seed)?,
        };
        bits.sort_unstable();
        let masks: Vec<Vec<bool>> = bits.iter().map(|&b| mask_of(b, d)).collect();
        let weights = bits
            .iter()
            .map(|b| shapley_kernel_weight(d, b.count_ones() as usize))
            .collect::<Result<Vec<_>>>()?;
        let targets = masks
            .iter()
            .map(|m| coalition_value(model, z_e, m, background))
            .collect();
        Ok(ShapleyProblem {
            masks,
            weights,
            targets,
            base_value: coalition_value(model, z_e, &vec![false; d], background),
            full_value: coalition_value(model, z_e, &vec![true; d], background),
        })
    }

    pub fn dim(&self) -> usize {
        self.masks.first().map(Vec::len).unwrap_or(1)
    }

    /// Weighted least squares `phi = (X^T W X)^{-1} X^T W y` under the
    /// efficiency constraint `sum(phi) = v(full) - v(empty)`, imposed by
    /// substituting the last coefficient before forming the normal equations.
    pub fn solve(&self) -> Result<ShapleyValues> {
        let total = self.full_value - self.base_value;
        if self.masks.is_empty() {
            // single feature: no proper coalitions, the constraint fixes phi
            return Ok(ShapleyValues {
                phi: vec![total],
                base_value: self.base_value,
            });
        }
        let d = self.dim();
        let last = d - 1;
        let mut gram = DMatrix::<f64>::zeros(last, last);
        let mut rhs = DVector::<f64>::zeros(last);
        let mut x = vec![0.0; last];
        for ((mask, &w), &y) in self.masks.iter().zip(&self.weights).zip(&self.targets) {
            let m_last = f64::from(u8::from(mask[last]));
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = f64::from(u8::from(mask[i])) - m_last;
            }
            let t = y - self.base_value - m_last * total;
            for i in 0..last {
                if x[i] == 0.0 {
                    continue;
                }
                rhs[i] += w * x[i] * t;
                for j in 0..last {
                    gram[(i, j)] += w * x[i] * x[j];
                }
            }
        }
        let chol = gram.cholesky().ok_or_else(|| {
            Error::Singular(format!(
                "reduced KernelSHAP system over {} coalitions is not positive definite; sample more coalitions",
                self.masks.len()
            ))
        })?;
        let reduced = chol.solve(&rhs);
        let mut phi: Vec<f64> = reduced.iter().copied().collect();
        phi.push(total - phi.iter().sum::<f64>());
        Ok(ShapleyValues {
            phi,
            base_value: self.base_value,
        })
    }

    /// One row per coalition: indicator columns, kernel weight, target.
    /// The empty and full coalitions come last with weight `inf`.
    pub fn to_csv(&self) -> String {
        let d = self.dim();
        let mut out = String::new();
        let header: Vec<String> = (0..d)
            .map(|j| format!("s{j}"))
            .chain(["weight".into(), "target".into()])
            .collect();
        writeln!(out, "{}", header.join(",")).unwrap();
        let mut row = |mask: &[bool], w: &str, y: f64| {
            let cells: Vec<String> = mask.iter().map(|&b| u8::from(b).to_string()).collect();
            writeln!(out, "{},{w},{}", cells.join(","), format_real(y)).unwrap();
        };
        for ((mask, &w), &y) in self.masks.iter().zip(&self.weights).zip(&self.targets) {
            row(mask, &format_real(w), y);
        }
        row(&vec![false; d], "inf", self.base_value);
        row(&vec![true; d], "inf", self.full_value);
        out
    }
}

/// Distinct proper non-empty coalitions: size `s` with probability proportional
/// to its total kernel mass `(d - 1) / (s (d - s))` among sizes not yet
/// exhausted, then a uniform coalition of that size not drawn before.
fn sample_coalitions(d: usize, m: usize, seed: u64) -> Result<Vec<u64>> {
    if !(2..=63).contains(&d) {
        return Err(Error::InvalidInput(format!(
            "sampled KernelSHAP supports 2..=63 features, got {d}"
        )));
    }
    let available = (1u128 << d) - 2;
    if m < d || m as u128 > available {
        return Err(Error::InvalidConfig(format!(
            "sampled KernelSHAP needs d <= m <= 2^d - 2 coalitions, got m = {m} for d = {d}"
        )));
    }
    let mut rng = seeded_rng(seed);
    let mass: Vec<f64> = (0..d)
        .map(|s| {
            if s == 0 {
                0.0
            } else {
                (d - 1) as f64 / (s * (d - s)) as f64
            }
        })
        .collect();
    let capacity: Vec<f64> = (0..d).map(|s| binomial(d, s)).collect();
    let mut used_per_size = vec![0f64; d];
    let mut seen = HashSet::with_capacity(m);
    let mut drawn = Vec::with_capacity(m);
    while drawn.len() < m {
        let open: Vec<usize> = (1..d).filter(|&s| used_per_size[s] < capacity[s]).collect();
        let total: f64 = open.iter().map(|&s| mass[s]).sum();
        let mut u = rng.random::<f64>() * total;
        let mut size = *open.last().expect("m <= 2^d - 2 leaves an open size");
        for &s in &open {
            if u < mass[s] {
                size = s;
                break;
            }
            u -= mass[s];
        }
        let bits = sample(&mut rng, d, size).iter().fold(0u64, |acc, j| acc | 1 << j);
        if seen.insert(bits) {
            used_per_size[size] += 1.0;
            drawn.push(bits);
        }
    }
    Ok(drawn)
}

/// Shapley values by constrained kernel regression.
pub fn kernelshap_solve(
    model: &dyn BlackBox,
    z_e: &[f64],
    background: &Background,
    source: SubsetSource,
) -> Result<ShapleyValues> {
    ShapleyProblem::build(model, z_e, background, source)?.solve()
}
