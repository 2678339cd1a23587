//! Neighbourhood generators that perturb or search the feature space directly.

mod gsls;
mod leap;
mod lime;
mod lore;

pub use gsls::{growing_spheres_counterfactual, gsls_neighbourhood, GrowingSpheres, GslsConfig};
pub use leap::{leap_neighbourhood, lid_estimate, local_pca, LeapConfig, LocalPca};
pub use lime::{default_kernel_width, lime_neighbourhood, lime_weights, LimeConfig};
pub use lore::{
    fitness_value, lore_distance, lore_fitness, lore_neighbourhood, run_lore_ga, GaRun, LoreConfig, LoreTarget,
};

use std::fmt;
use std::path::Path;

use serde::de::{self, Deserializer};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

use crate::data::format_real;
use crate::error::{Error, Result};
use crate::types::Neighbourhood;

/// A parameter that is either derived from the data (`"auto"`) or given explicitly.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Tunable<T> {
    #[default]
    Auto,
    Fixed(T),
}

impl<T: Serialize> Serialize for Tunable<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Tunable::Auto => serializer.serialize_str("auto"),
            Tunable::Fixed(v) => v.serialize(serializer),
        }
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Tunable<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw<T> {
            Word(String),
            Value(T),
        }
        match Raw::<T>::deserialize(deserializer)? {
            Raw::Word(w) if w == "auto" => Ok(Tunable::Auto),
            Raw::Word(w) => Err(de::Error::custom(format!("expected \"auto\" or a value, got \"{w}\""))),
            Raw::Value(v) => Ok(Tunable::Fixed(v)),
        }
    }
}

impl<T: fmt::Debug> fmt::Display for Tunable<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tunable::Auto => f.write_str("auto"),
            Tunable::Fixed(v) => write!(f, "{v:?}"),
        }
    }
}

/// Feature columns, then `weight` (empty when unweighted), then `bb_label`.
pub fn neighbourhood_to_csv(hood: &Neighbourhood) -> String {
    let d = hood.dim();
    let mut out = String::new();
    let mut header: Vec<String> = (0..d).map(|j| format!("x{j}")).collect();
    header.push("weight".into());
    header.push("bb_label".into());
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, p) in hood.points.iter().enumerate() {
        let mut cells: Vec<String> = p.iter().map(|v| format_real(*v)).collect();
        cells.push(hood.weights.as_ref().map(|w| format_real(w[i])).unwrap_or_default());
        cells.push(hood.bb_labels[i].to_string());
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize)]
struct NeighbourhoodMeta<'a> {
    strategy: &'a str,
    seed: u64,
    size: usize,
    weighted: bool,
    anchor: Option<&'a [f64]>,
    config: &'a serde_json::Value,
    warnings: &'a [String],
}

/// Writes the CSV and its JSON metadata sidecar.
pub fn write_neighbourhood(
    hood: &Neighbourhood,
    config: &serde_json::Value,
    csv_path: &Path,
    meta_path: &Path,
) -> Result<()> {
    std::fs::write(csv_path, neighbourhood_to_csv(hood)).map_err(|e| Error::io(csv_path, e))?;
    let meta = NeighbourhoodMeta {
        strategy: hood.strategy.as_str(),
        seed: hood.seed,
        size: hood.len(),
        weighted: hood.weights.is_some(),
        anchor: hood.anchor.as_deref(),
        config,
        warnings: &hood.warnings,
    };
    let mut text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    text.push('\n');
    std::fs::write(meta_path, text).map_err(|e| Error::io(meta_path, e))
}
