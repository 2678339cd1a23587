//! Domain types shared by every neighbourhood strategy and surrogate.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The point whose prediction is being explained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Instance(Vec<f64>);

impl Instance {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("instance has zero features".into()));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("instance feature {j} is not finite")));
        }
        Ok(Instance(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for Instance {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Instance {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Instance::new(values)
    }
}

impl From<Instance> for Vec<f64> {
    fn from(instance: Instance) -> Self {
        instance.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Continuous,
    /// Integer codes of a discrete attribute.
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub name: String,
    pub kind: FeatureKind,
    pub min: f64,
    pub max: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl FeatureMeta {
    pub fn range(&self) -> f64 {
        self.max - self.min
    }
}

/// Tabular training data: `n` rows of `d` features, optional binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<Vec<f64>>,
    labels: Option<Vec<u8>>,
    meta: Vec<FeatureMeta>,
}

impl Dataset {
    /// Builds a dataset of continuous features named `x0..x{d-1}`.
    pub fn new(rows: Vec<Vec<f64>>, labels: Option<Vec<u8>>) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        let names = (0..d).map(|j| format!("x{j}")).collect();
        let kinds = vec![FeatureKind::Continuous; d];
        Self::with_schema(rows, labels, names, kinds)
    }

    pub fn with_schema(
        rows: Vec<Vec<f64>>,
        labels: Option<Vec<u8>>,
        names: Vec<String>,
        kinds: Vec<FeatureKind>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("dataset has no rows".into()));
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::InvalidInput("dataset has zero features".into()));
        }
        if names.len() != d || kinds.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: names.len().min(kinds.len()),
            });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::InvalidInput(format!(
                    "row {i} has {} features, expected {d}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("row {i} has a non-finite value")));
            }
            for (j, kind) in kinds.iter().enumerate() {
                if *kind == FeatureKind::Categorical && row[j].fract() != 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "row {i}: categorical feature {j} holds non-integer {}",
                        row[j]
                    )));
                }
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != rows.len() {
                return Err(Error::DimensionMismatch {
                    expected: rows.len(),
                    got: labels.len(),
                });
            }
            if labels.iter().any(|&y| y > 1) {
                return Err(Error::InvalidInput("labels must be 0 or 1".into()));
            }
        }

        let n = rows.len() as f64;
        let meta = (0..d)
            .map(|j| {
                let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
                for row in &rows {
                    min = min.min(row[j]);
                    max = max.max(row[j]);
                    sum += row[j];
                }
                let mean = sum / n;
                let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
                FeatureMeta {
                    name: names[j].clone(),
                    kind: kinds[j],
                    min,
                    max,
                    std: var.sqrt(),
                }
            })
            .collect();

        Ok(Dataset { rows, labels, meta })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.meta.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn meta(&self) -> &[FeatureMeta] {
        &self.meta
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.meta.iter().map(|m| m.name.clone()).collect()
    }

    /// Returns row `i` as an [`Instance`].
    pub fn instance(&self, i: usize) -> Result<Instance> {
        let row = self
            .rows
            .get(i)
            .ok_or_else(|| Error::InvalidInput(format!("index {i} out of range for {} rows", self.rows.len())))?;
        Instance::new(row.clone())
    }

    pub fn stds(&self) -> Vec<f64> {
        self.meta.iter().map(|m| m.std).collect()
    }
}

/// A binary classifier seen only through its predictions.
///
/// `predict_label(x)` is 1 exactly when `predict_proba(x) >= 0.5`.
pub trait BlackBox: Send + Sync {
    fn n_features(&self) -> usize;

    fn predict_proba(&self, x: &[f64]) -> f64;

    fn predict_label(&self, x: &[f64]) -> u8 {
        u8::from(self.predict_proba(x) >= 0.5)
    }
}

/// Wraps a plain function as a black box. Handy for analytic test models.
pub struct FnModel<F> {
    dim: usize,
    f: F,
}

impl<F> FnModel<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnModel { dim, f }
    }
}

impl<F> BlackBox for FnModel<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn n_features(&self) -> usize {
        self.dim
    }

    fn predict_proba(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyId {
    Lime,
    Gsls,
    Lore,
    Leap,
    Kernelshap,
    Palex,
}

impl StrategyId {
    pub const ALL: [StrategyId; 6] = [
        StrategyId::Lime,
        StrategyId::Gsls,
        StrategyId::Lore,
        StrategyId::Leap,
        StrategyId::Kernelshap,
        StrategyId::Palex,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyId::Lime => "lime",
            StrategyId::Gsls => "gsls",
            StrategyId::Lore => "lore",
            StrategyId::Leap => "leap",
            StrategyId::Kernelshap => "kernelshap",
            StrategyId::Palex => "palex",
        }
    }

    /// Fixed offset added to the root seed so strategies draw independent streams.
    pub fn seed_offset(self) -> u64 {
        match self {
            StrategyId::Lime => 1,
            StrategyId::Gsls => 2,
            StrategyId::Lore => 3,
            StrategyId::Leap => 4,
            StrategyId::Kernelshap => 5,
            StrategyId::Palex => 6,
        }
    }

    pub fn sub_seed(self, root: u64) -> u64 {
        root.wrapping_add(self.seed_offset())
    }
}

impl fmt::Display for StrategyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyId::ALL.into_iter().find(|id| id.as_str() == s).ok_or_else(|| {
            let valid: Vec<_> = StrategyId::ALL.iter().map(|id| id.as_str()).collect();
            Error::InvalidInput(format!("unknown method '{s}'; valid methods: {}", valid.join(", ")))
        })
    }
}

/// The generated dataset a surrogate is trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighbourhood {
    pub points: Vec<Vec<f64>>,
    pub weights: Option<Vec<f64>>,
    pub bb_labels: Vec<u8>,
    pub bb_probas: Vec<f64>,
    pub strategy: StrategyId,
    pub seed: u64,
    /// Point the neighbourhood is built around when it is not the explained
    /// instance (the counterfactual for GSLS).
    pub anchor: Option<Vec<f64>>,
    /// Non-fatal diagnostics raised while generating (e.g. one-class LORE output).
    pub warnings: Vec<String>,
}

impl Neighbourhood {
    /// Labels `points` with the black box and checks the structural invariants.
    pub fn label(
        model: &dyn BlackBox,
        points: Vec<Vec<f64>>,
        weights: Option<Vec<f64>>,
        strategy: StrategyId,
        seed: u64,
    ) -> Result<Self> {
        let d = model.n_features();
        for (i, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{strategy} produced a non-finite point at index {i}"
                )));
            }
        }
        if let Some(w) = &weights {
            if w.len() != points.len() {
                return Err(Error::DimensionMismatch {
                    expected: points.len(),
                    got: w.len(),
                });
            }
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "{strategy} produced a negative or non-finite weight"
                )));
            }
        }
        let bb_probas: Vec<f64> = points.iter().map(|p| model.predict_proba(p)).collect();
        let bb_labels = bb_probas.iter().map(|&p| u8::from(p >= 0.5)).collect();
        Ok(Neighbourhood {
            points,
            weights,
            bb_labels,
            bb_probas,
            strategy,
            seed,
            anchor: None,
            warnings: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map(Vec::len).unwrap_or(0)
    }
}

/// The readable output of one explain run, with what is needed to repeat it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub method: StrategyId,
    pub surrogate: String,
    pub attribution: Option<Vec<f64>>,
    pub base_value: Option<f64>,
    pub tree: Option<String>,
    pub fidelity: f64,
    pub seed: u64,
    pub config_digest: String,
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Explanation {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("explanation serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse("explanation", e.to_string()))
    }
}

pub const TOOL_VERSION: &str = concat!("locality ", env!("CARGO_PKG_VERSION"));
