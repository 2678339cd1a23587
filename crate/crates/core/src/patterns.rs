//! PALEX: subset-replacement sampling weighted by co-occurrence in frequent
//! (feature, bin) patterns mined with Apriori.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeded_rng;
use crate::types::{BlackBox, Dataset, FeatureKind, Instance, Neighbourhood, StrategyId};

/// A (feature index, bin id) pair.
pub type Item = (usize, i64);

/// Per-feature discretisation. Continuous features carry strictly increasing
/// interior edges (bin = number of edges `<=` x); categorical features map to
/// their integer code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub edges: Vec<Vec<f64>>,
    pub categorical: Vec<bool>,
}

impl Binning {
    pub fn dim(&self) -> usize {
        self.edges.len()
    }

    pub fn bin(&self, feature: usize, x: f64) -> i64 {
        if self.categorical[feature] {
            x.round() as i64
        } else {
            self.edges[feature].partition_point(|e| *e <= x) as i64
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<i64> {
        x.iter().enumerate().map(|(j, &v)| self.bin(j, v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Discretized {
    pub binning: Binning,
    pub rows: Vec<Vec<i64>>,
    pub warnings: Vec<String>,
}

/// Equal-frequency binning: interior edges at the sorted values of rank
/// `j * n / bins`, deduplicated and strictly above the column minimum.
pub fn discretize(data: &Dataset, bins: usize) -> Result<Discretized> {
    if bins < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 bins, got {bins}")));
    }
    let n = data.n_rows();
    let mut edges = Vec::with_capacity(data.n_features());
    let mut categorical = Vec::with_capacity(data.n_features());
    let mut warnings = Vec::new();
    for (j, meta) in data.meta().iter().enumerate() {
        let is_cat = meta.kind == FeatureKind::Categorical;
        categorical.push(is_cat);
        if is_cat {
            edges.push(Vec::new());
            continue;
        }
        let mut col: Vec<f64> = data.rows().iter().map(|r| r[j]).collect();
        col.sort_by(f64::total_cmp);
        let mut e: Vec<f64> = Vec::with_capacity(bins - 1);
        for k in 1..bins {
            let v = col[k * n / bins];
            if v > col[0] && e.last().is_none_or(|last| v > *last) {
                e.push(v);
            }
        }
        if e.is_empty() {
            warnings.push(format!("feature {j} is constant; it forms a single bin"));
        }
        edges.push(e);
    }
    let binning = Binning { edges, categorical };
    let rows = data.rows().iter().map(|r| binning.apply(r)).collect();
    Ok(Discretized {
        binning,
        rows,
        warnings,
    })
}

/// Items sorted by feature, one per feature.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub items: Vec<Item>,
    pub support: f64,
}

impl Pattern {
    pub fn matches(&self, binned: &[i64]) -> bool {
        self.items.iter().all(|&(f, b)| binned[f] == b)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatternSet {
    pub patterns: Vec<Pattern>,
    pub binning: Binning,
    pub min_support: f64,
    pub max_length: usize,
}

#[derive(Serialize, Deserialize)]
struct PatternDoc {
    items: Vec<String>,
    support: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatternSetDoc {
    min_support: f64,
    max_length: usize,
    binning: Binning,
    patterns: Vec<PatternDoc>,
}

impl PatternSet {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// `phi_i(x)` for every pattern.
    pub fn features(&self, x: &[f64]) -> Vec<f64> {
        let binned = self.binning.apply(x);
        self.patterns
            .iter()
            .map(|p| if p.matches(&binned) { p.support } else { 0.0 })
            .collect()
    }

    pub fn to_json(&self) -> String {
        let doc = PatternSetDoc {
            min_support: self.min_support,
            max_length: self.max_length,
            binning: self.binning.clone(),
            patterns: self
                .patterns
                .iter()
                .map(|p| PatternDoc {
                    items: p.items.iter().map(|(f, b)| format!("{f}:{b}")).collect(),
                    support: p.support,
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("pattern set serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PatternSetDoc = serde_json::from_str(text).map_err(|e| Error::parse("pattern set", e.to_string()))?;
        let patterns = doc
            .patterns
            .into_iter()
            .map(|p| {
                let items = p
                    .items
                    .iter()
                    .map(|it| {
                        let (f, b) = it
                            .split_once(':')
                            .ok_or_else(|| Error::parse("pattern set", format!("item '{it}' is not feature:bin")))?;
                        let f = f
                            .parse()
                            .map_err(|_| Error::parse("pattern set", format!("bad feature in '{it}'")))?;
                        let b = b
                            .parse()
                            .map_err(|_| Error::parse("pattern set", format!("bad bin in '{it}'")))?;
                        Ok((f, b))
                    })
                    .collect::<Result<Vec<Item>>>()?;
                Ok(Pattern {
                    items,
                    support: p.support,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PatternSet {
            patterns,
            binning: doc.binning,
            min_support: doc.min_support,
            max_length: doc.max_length,
        })
    }
}

fn is_frequent(count: usize, n: usize, min_support: f64) -> bool {
    count as f64 >= min_support * n as f64 - 1e-9
}

/// Level-wise Apriori over rows of bin ids. Patterns come out ordered by
/// length, then lexicographically by items.
pub fn apriori(rows: &[Vec<i64>], binning: &Binning, min_support: f64, max_length: usize) -> Result<PatternSet> {
    if !(min_support > 0.0 && min_support <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "min_support must be in (0, 1], got {min_support}"
        )));
    }
    if max_length == 0 {
        return Err(Error::InvalidConfig("max_length must be at least 1".into()));
    }
    let n = rows.len();
    let mut patterns = Vec::new();
    if n == 0 {
        return Ok(PatternSet {
            patterns,
            binning: binning.clone(),
            min_support,
            max_length,
        });
    }

    let mut counts: BTreeMap<Vec<Item>, usize> = BTreeMap::new();
    for row in rows {
        for (f, &b) in row.iter().enumerate() {
            *counts.entry(vec![(f, b)]).or_default() += 1;
        }
    }
    let mut level: Vec<Vec<Item>> = Vec::new();
    for (items, c) in counts {
        if is_frequent(c, n, min_support) {
            patterns.push(Pattern {
                support: c as f64 / n as f64,
                items: items.clone(),
            });
            level.push(items);
        }
    }

    for _ in 2..=max_length {
        let frequent: BTreeSet<&Vec<Item>> = level.iter().collect();
        let mut candidates = Vec::new();
        for (i, a) in level.iter().enumerate() {
            for b in &level[i + 1..] {
                let k = a.len();
                if a[..k - 1] != b[..k - 1] {
                    break;
                }
                if a[k - 1].0 >= b[k - 1].0 {
                    continue;
                }
                let mut cand = a.clone();
                cand.push(b[k - 1]);
                let pruned = (0..cand.len()).any(|skip| {
                    let sub: Vec<Item> = cand
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != skip)
                        .map(|(_, it)| *it)
                        .collect();
                    !frequent.contains(&sub)
                });
                if !pruned {
                    candidates.push(cand);
                }
            }
        }
        let mut next = Vec::new();
        for cand in candidates {
            let c = rows.iter().filter(|r| cand.iter().all(|&(f, b)| r[f] == b)).count();
            if is_frequent(c, n, min_support) {
                patterns.push(Pattern {
                    support: c as f64 / n as f64,
                    items: cand.clone(),
                });
                next.push(cand);
            }
        }
        if next.is_empty() {
            break;
        }
        level = next;
    }
    Ok(PatternSet {
        patterns,
        binning: binning.clone(),
        min_support,
        max_length,
    })
}

/// `phi_i(x)`: the pattern's support when the binned `x` matches every item, else 0.
pub fn pattern_feature(x: &[f64], pattern: &Pattern, binning: &Binning) -> f64 {
    if pattern.matches(&binning.apply(x)) {
        pattern.support
    } else {
        0.0
    }
}

/// L1 distance between pattern-feature vectors. Zero for an empty set.
pub fn palex_distance(x: &[f64], z: &[f64], ps: &PatternSet) -> f64 {
    ps.features(x)
        .iter()
        .zip(ps.features(z))
        .map(|(a, b)| (a - b).abs())
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMap {
    /// `exp(-d)`
    Exp,
    /// `1 / (1 + d)`
    Inverse,
}

impl WeightMap {
    pub fn apply(self, distance: f64) -> f64 {
        match self {
            WeightMap::Exp => (-distance).exp(),
            WeightMap::Inverse => 1.0 / (1.0 + distance),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PalexConfig {
    pub sample_count: usize,
    pub min_support: f64,
    pub max_length: usize,
    pub bins: usize,
    pub weight_map: WeightMap,
}

impl Default for PalexConfig {
    fn default() -> Self {
        PalexConfig {
            sample_count: 5000,
            min_support: 0.05,
            max_length: 4,
            bins: 4,
            weight_map: WeightMap::Exp,
        }
    }
}

/// Discretises `data` and mines its frequent patterns.
pub fn mine_patterns(data: &Dataset, cfg: &PalexConfig) -> Result<(PatternSet, Vec<String>)> {
    let disc = discretize(data, cfg.bins)?;
    let ps = apriori(&disc.rows, &disc.binning, cfg.min_support, cfg.max_length)?;
    let mut warnings = disc.warnings;
    if ps.is_empty() {
        warnings.push("no frequent patterns; every PALEX weight is 1".into());
    }
    Ok((ps, warnings))
}

/// Each sample keeps `z_e` on a uniformly random feature subset (independent
/// fair coin per feature, so the empty and full subsets occur) and takes a
/// uniformly drawn training row elsewhere.
pub fn palex_neighbourhood(
    model: &dyn BlackBox,
    data: &Dataset,
    z_e: &Instance,
    cfg: &PalexConfig,
    seed: u64,
) -> Result<Neighbourhood> {
    let d = z_e.dim();
    if data.n_features() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: data.n_features(),
        });
    }
    if cfg.sample_count == 0 {
        return Err(Error::InvalidConfig("PALEX sample count must be at least 1".into()));
    }
    let (ps, warnings) = mine_patterns(data, cfg)?;
    let phi_e = ps.features(z_e);

    let mut rng = seeded_rng(seed);
    let mut points = Vec::with_capacity(cfg.sample_count);
    let mut weights = Vec::with_capacity(cfg.sample_count);
    for _ in 0..cfg.sample_count {
        let mask: Vec<bool> = (0..d).map(|_| rng.random::<bool>()).collect();
        let row = data.row(rng.random_range(0..data.n_rows()));
        let p: Vec<f64> = (0..d).map(|j| if mask[j] { z_e[j] } else { row[j] }).collect();
        let dist: f64 = ps.features(&p).iter().zip(&phi_e).map(|(a, b)| (a - b).abs()).sum();
        weights.push(cfg.weight_map.apply(dist));
        points.push(p);
    }
    let mut hood = Neighbourhood::label(model, points, Some(weights), StrategyId::Palex, seed)?;
    hood.warnings = warnings;
    Ok(hood)
}
