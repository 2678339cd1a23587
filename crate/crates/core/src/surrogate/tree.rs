use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::normalized_weights;
use crate::data::format_real;
use crate::error::{Error, Result};

const GAIN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        class: u8,
        weight: f64,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSurrogate {
    pub root: TreeNode,
    pub max_depth: usize,
}

impl TreeSurrogate {
    pub fn predict(&self, x: &[f64]) -> u8 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { class, .. } => return *class,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(left).max(go(right)),
            }
        }
        go(&self.root)
    }

    pub fn n_leaves(&self) -> usize {
        fn go(n: &TreeNode) -> usize {
            match n {
                TreeNode::Leaf { .. } => 1,
                TreeNode::Split { left, right, .. } => go(left) + go(right),
            }
        }
        go(&self.root)
    }

    /// Indented rule listing, one condition per line, leaves as `-> class`.
    pub fn rules(&self, names: &[String]) -> String {
        fn go(n: &TreeNode, names: &[String], indent: usize, out: &mut String) {
            let pad = "  ".repeat(indent);
            match n {
                TreeNode::Leaf { class, .. } => {
                    writeln!(out, "{pad}-> {class}").unwrap();
                }
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let name = names.get(*feature).cloned().unwrap_or_else(|| format!("x{feature}"));
                    let t = format_real(*threshold);
                    writeln!(out, "{pad}{name} <= {t}").unwrap();
                    go(left, names, indent + 1, out);
                    writeln!(out, "{pad}{name} > {t}").unwrap();
                    go(right, names, indent + 1, out);
                }
            }
        }
        let mut out = String::new();
        go(&self.root, names, 0, &mut out);
        out
    }
}

fn gini(w0: f64, w1: f64) -> f64 {
    let t = w0 + w1;
    if t <= 0.0 {
        return 0.0;
    }
    let (p0, p1) = (w0 / t, w1 / t);
    1.0 - p0 * p0 - p1 * p1
}

fn class_weights(idx: &[usize], labels: &[u8], w: &[f64]) -> (f64, f64) {
    idx.iter().fold(
        (0.0, 0.0),
        |(a, b), &i| if labels[i] == 0 { (a + w[i], b) } else { (a, b + w[i]) },
    )
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn best_split(points: &[Vec<f64>], labels: &[u8], w: &[f64], idx: &[usize], min_leaf: f64) -> Option<Split> {
    let d = points[idx[0]].len();
    let (t0, t1) = class_weights(idx, labels, w);
    let parent = (t0 + t1) * gini(t0, t1);
    let mut best: Option<Split> = None;
    let mut order = idx.to_vec();
    for f in 0..d {
        order.sort_by(|&a, &b| points[a][f].total_cmp(&points[b][f]).then(a.cmp(&b)));
        let (mut l0, mut l1) = (0.0, 0.0);
        for k in 0..order.len() - 1 {
            let i = order[k];
            if labels[i] == 0 {
                l0 += w[i];
            } else {
                l1 += w[i];
            }
            let (a, b) = (points[i][f], points[order[k + 1]][f]);
            if a == b {
                continue;
            }
            let (r0, r1) = (t0 - l0, t1 - l1);
            if l0 + l1 < min_leaf || r0 + r1 < min_leaf {
                continue;
            }
            let gain = parent - (l0 + l1) * gini(l0, l1) - (r0 + r1) * gini(r0, r1);
            if gain > GAIN_TOLERANCE && best.as_ref().is_none_or(|s| gain > s.gain + GAIN_TOLERANCE) {
                best = Some(Split {
                    feature: f,
                    threshold: a + (b - a) / 2.0,
                    gain,
                });
            }
        }
    }
    best
}

fn grow(
    points: &[Vec<f64>],
    labels: &[u8],
    w: &[f64],
    idx: Vec<usize>,
    depth: usize,
    max_depth: usize,
    min_leaf: f64,
) -> TreeNode {
    let (w0, w1) = class_weights(&idx, labels, w);
    let leaf = TreeNode::Leaf {
        class: u8::from(w1 > w0),
        weight: w0 + w1,
    };
    if depth >= max_depth || w0 == 0.0 || w1 == 0.0 {
        return leaf;
    }
    let Some(split) = best_split(points, labels, w, &idx, min_leaf) else {
        return leaf;
    };
    let (left, right): (Vec<usize>, Vec<usize>) = idx
        .into_iter()
        .partition(|&i| points[i][split.feature] <= split.threshold);
    TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow(points, labels, w, left, depth + 1, max_depth, min_leaf)),
        right: Box::new(grow(points, labels, w, right, depth + 1, max_depth, min_leaf)),
    }
}

/// Greedy CART on weighted Gini impurity. Weights are rescaled to average 1,
/// so `min_leaf_weight` counts points of mean weight and split choice does
/// not depend on weight scale.
pub fn fit_tree(
    points: &[Vec<f64>],
    labels: &[u8],
    weights: Option<&[f64]>,
    max_depth: usize,
    min_leaf_weight: f64,
) -> Result<TreeSurrogate> {
    let n = points.len();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidInput("tree labels must be 0 or 1".into()));
    }
    if max_depth == 0 {
        return Err(Error::InvalidConfig("tree max_depth must be at least 1".into()));
    }
    if !(min_leaf_weight >= 0.0 && min_leaf_weight.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "min_leaf_weight must be nonnegative, got {min_leaf_weight}"
        )));
    }
    let d = points.first().map(Vec::len).unwrap_or(0);
    let w = normalized_weights(n, d, points, weights, n as f64)?;
    let idx: Vec<usize> = (0..n).filter(|&i| w[i] > 0.0).collect();
    let root = grow(points, labels, &w, idx, 0, max_depth, min_leaf_weight);
    Ok(TreeSurrogate { root, max_depth })
}
