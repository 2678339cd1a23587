//! Synthetic half-moons data and the CSV dialect shared by every file the tool writes.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeded_rng;
use crate::types::{Dataset, FeatureKind};

/// Header suffix marking a categorical-coded column.
const CATEGORICAL_SUFFIX: &str = ":cat";
const LABEL_COLUMN: &str = "label";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfMoons {
    pub n: usize,
    /// Standard deviation of the isotropic Gaussian noise.
    pub noise: f64,
    pub seed: u64,
}

/// Two interleaving unit semicircles. Class 0 sits at `(cos t, sin t)`, class 1 at
/// `(1 - cos t, 0.5 - sin t)`, with `t ~ U[0, pi]`. Class 0 gets the odd point.
pub fn generate_half_moons(params: &HalfMoons) -> Result<Dataset> {
    if params.n < 2 {
        return Err(Error::InvalidInput(format!(
            "half-moons needs n >= 2, got {}",
            params.n
        )));
    }
    if !(params.noise >= 0.0 && params.noise.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "noise must be a nonnegative real, got {}",
            params.noise
        )));
    }
    let mut rng = seeded_rng(params.seed);
    let noise = Normal::new(0.0, params.noise).expect("validated std");
    let n0 = params.n.div_ceil(2);

    let mut rows = Vec::with_capacity(params.n);
    let mut labels = Vec::with_capacity(params.n);
    for i in 0..params.n {
        let t = rng.random_range(0.0..=PI);
        let (label, mut point) = if i < n0 {
            (0u8, [t.cos(), t.sin()])
        } else {
            (1u8, [1.0 - t.cos(), 0.5 - t.sin()])
        };
        if params.noise > 0.0 {
            point[0] += noise.sample(&mut rng);
            point[1] += noise.sample(&mut rng);
        }
        rows.push(point.to_vec());
        labels.push(label);
    }
    Dataset::new(rows, Some(labels))
}

/// Reads a CSV with a header row. A trailing `label` column holds class ids in {0, 1};
/// columns whose header ends in `:cat` are categorical codes.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, &path.display().to_string())
}

pub fn parse_csv(text: &str, source: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(source, e.to_string()))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::parse(source, "empty file"));
    }
    if headers.iter().all(|h| h.parse::<f64>().is_ok()) {
        return Err(Error::parse(format!("{source}:1"), "missing header row"));
    }

    let has_label = headers.iter().next_back() == Some(LABEL_COLUMN);
    let n_features = headers.len() - usize::from(has_label);
    if n_features == 0 {
        return Err(Error::parse(source, "no feature columns"));
    }
    let mut names = Vec::with_capacity(n_features);
    let mut kinds = Vec::with_capacity(n_features);
    for h in headers.iter().take(n_features) {
        match h.strip_suffix(CATEGORICAL_SUFFIX) {
            Some(name) => {
                names.push(name.to_string());
                kinds.push(FeatureKind::Categorical);
            }
            None => {
                names.push(h.to_string());
                kinds.push(FeatureKind::Continuous);
            }
        }
    }

    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| Error::parse(format!("{source}:{line}"), e.to_string()))?;
        if record.len() != headers.len() {
            return Err(Error::parse(
                format!("{source}:{line}"),
                format!("expected {} fields, found {}", headers.len(), record.len()),
            ));
        }
        let mut row = Vec::with_capacity(n_features);
        for (j, cell) in record.iter().take(n_features).enumerate() {
            let value = cell.parse::<f64>().map_err(|_| {
                Error::parse(
                    format!("{source}:{line}"),
                    format!("column {j}: '{cell}' is not numeric"),
                )
            })?;
            row.push(value);
        }
        if has_label {
            let cell = &record[n_features];
            let label = match cell.parse::<f64>() {
                Ok(0.0) => 0,
                Ok(1.0) => 1,
                _ => {
                    return Err(Error::parse(
                        format!("{source}:{line}"),
                        format!("unknown label value '{cell}'"),
                    ))
                }
            };
            labels.push(label);
        }
        rows.push(row);
    }
    Dataset::with_schema(rows, has_label.then_some(labels), names, kinds)
}

pub fn to_csv(data: &Dataset) -> String {
    let mut out = String::new();
    let mut header: Vec<String> = data
        .meta()
        .iter()
        .map(|m| match m.kind {
            FeatureKind::Continuous => m.name.clone(),
            FeatureKind::Categorical => format!("{}{CATEGORICAL_SUFFIX}", m.name),
        })
        .collect();
    if data.labels().is_some() {
        header.push(LABEL_COLUMN.to_string());
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, row) in data.rows().iter().enumerate() {
        let mut cells: Vec<String> = row.iter().map(|v| format_real(*v)).collect();
        if let Some(labels) = data.labels() {
            cells.push(labels[i].to_string());
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_csv(data)).map_err(|e| Error::io(path, e))
}

/// Shortest decimal that parses back to the same `f64`.
pub fn format_real(v: f64) -> String {
    format!("{v:?}")
}
