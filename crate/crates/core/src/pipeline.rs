//! The two-step explain procedure: build a neighbourhood with the chosen
//! strategy, then fit the chosen surrogate to the black box on it.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::neighbourhood::{
    gsls_neighbourhood, leap_neighbourhood, lime_neighbourhood, lore_neighbourhood, GslsConfig, LeapConfig, LimeConfig,
    LoreConfig, Tunable,
};
use crate::patterns::{palex_neighbourhood, PalexConfig};
use crate::seeded_rng;
use crate::shapley::{
    coalition_cloud, exact_shapley, kmeans_background, Background, ShapleyProblem, ShapleyValues, SubsetSource,
};
use crate::surrogate::{attribution_of, fit_tree, fit_weighted_ridge, DEFAULT_LAMBDA};
use crate::types::{BlackBox, Dataset, Explanation, Instance, Neighbourhood, StrategyId, TOOL_VERSION};

/// GSLS settings whose scale-dependent values default to the data's extent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GslsSettings {
    pub radius: Tunable<f64>,
    pub sample_count: usize,
    pub eta: Tunable<f64>,
    pub max_radius: Tunable<f64>,
    pub layer_samples: usize,
}

impl Default for GslsSettings {
    fn default() -> Self {
        GslsSettings {
            radius: Tunable::Auto,
            sample_count: 5000,
            eta: Tunable::Auto,
            max_radius: Tunable::Auto,
            layer_samples: 200,
        }
    }
}

impl GslsSettings {
    pub fn resolve(&self, data: &Dataset) -> GslsConfig {
        let auto = GslsConfig::for_data(data);
        let pick = |t: &Tunable<f64>, default: f64| match t {
            Tunable::Auto => default,
            Tunable::Fixed(v) => *v,
        };
        let eta = pick(&self.eta, auto.eta);
        GslsConfig {
            radius: pick(&self.radius, 2.0 * eta),
            sample_count: self.sample_count,
            eta,
            max_radius: pick(&self.max_radius, auto.max_radius.max(eta)),
            layer_samples: self.layer_samples,
        }
    }
}

/// Rows used for the features outside a coalition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BackgroundSource {
    /// Every training row.
    Data,
    /// `n` distinct training rows (all of them when `n >= rows`), in data order.
    Sample { n: usize },
    /// k-means centroids of the training rows.
    Kmeans { k: usize, iterations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SubsetMode {
    Full,
    Sampled { m: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelShapConfig {
    pub background: BackgroundSource,
    pub mode: SubsetMode,
}

impl Default for KernelShapConfig {
    fn default() -> Self {
        KernelShapConfig {
            background: BackgroundSource::Sample { n: 100 },
            mode: SubsetMode::Full,
        }
    }
}

pub fn resolve_background(data: &Dataset, source: BackgroundSource, seed: u64) -> Result<Background> {
    match source {
        BackgroundSource::Data => Ok(Background::from_dataset(data)),
        BackgroundSource::Sample { n } => {
            if n == 0 {
                return Err(Error::InvalidConfig("background sample size must be at least 1".into()));
            }
            if n >= data.n_rows() {
                return Ok(Background::from_dataset(data));
            }
            let mut idx = sample(&mut seeded_rng(seed), data.n_rows(), n).into_vec();
            idx.sort_unstable();
            Background::new(idx.into_iter().map(|i| data.row(i).to_vec()).collect())
        }
        BackgroundSource::Kmeans { k, iterations } => Ok(kmeans_background(data, k, iterations, seed)?.background()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyConfig {
    Lime(LimeConfig),
    Gsls(GslsSettings),
    Lore(LoreConfig),
    Leap(LeapConfig),
    Kernelshap(KernelShapConfig),
    Palex(PalexConfig),
}

impl StrategyConfig {
    pub fn default_for(id: StrategyId) -> Self {
        match id {
            StrategyId::Lime => StrategyConfig::Lime(LimeConfig::default()),
            StrategyId::Gsls => StrategyConfig::Gsls(GslsSettings::default()),
            StrategyId::Lore => StrategyConfig::Lore(LoreConfig::default()),
            StrategyId::Leap => StrategyConfig::Leap(LeapConfig::default()),
            StrategyId::Kernelshap => StrategyConfig::Kernelshap(KernelShapConfig::default()),
            StrategyId::Palex => StrategyConfig::Palex(PalexConfig::default()),
        }
    }

    pub fn id(&self) -> StrategyId {
        match self {
            StrategyConfig::Lime(_) => StrategyId::Lime,
            StrategyConfig::Gsls(_) => StrategyId::Gsls,
            StrategyConfig::Lore(_) => StrategyId::Lore,
            StrategyConfig::Leap(_) => StrategyId::Leap,
            StrategyConfig::Kernelshap(_) => StrategyId::Kernelshap,
            StrategyConfig::Palex(_) => StrategyId::Palex,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurrogateConfig {
    /// Weighted ridge on `predict_proba`.
    Ridge {
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
    /// Weighted-Gini CART on `predict_label`.
    Tree {
        #[serde(default = "default_depth")]
        max_depth: usize,
        #[serde(default = "default_min_leaf")]
        min_leaf_weight: f64,
    },
    /// Constrained regression on coalition values (KernelSHAP only).
    ShapleyKernel,
}

fn default_lambda() -> f64 {
    DEFAULT_LAMBDA
}

fn default_depth() -> usize {
    3
}

fn default_min_leaf() -> f64 {
    1.0
}

impl SurrogateConfig {
    pub fn default_for(id: StrategyId) -> Self {
        match id {
            StrategyId::Gsls | StrategyId::Lore => SurrogateConfig::Tree {
                max_depth: default_depth(),
                min_leaf_weight: default_min_leaf(),
            },
            StrategyId::Kernelshap => SurrogateConfig::ShapleyKernel,
            _ => SurrogateConfig::Ridge { lambda: DEFAULT_LAMBDA },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SurrogateConfig::Ridge { .. } => "ridge",
            SurrogateConfig::Tree { .. } => "tree",
            SurrogateConfig::ShapleyKernel => "shapley_kernel",
        }
    }
}

/// Weighted share of positions where `preds` and `labels` agree.
pub fn fidelity(preds: &[u8], labels: &[u8], weights: Option<&[f64]>) -> Result<f64> {
    if preds.is_empty() {
        return Err(Error::InvalidInput("fidelity of an empty neighbourhood".into()));
    }
    if preds.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: preds.len(),
        });
    }
    match weights {
        None => Ok(preds.iter().zip(labels).filter(|(a, b)| a == b).count() as f64 / preds.len() as f64),
        Some(w) => {
            if w.len() != preds.len() {
                return Err(Error::DimensionMismatch {
                    expected: preds.len(),
                    got: w.len(),
                });
            }
            let total: f64 = w.iter().sum();
            if total.is_nan() || total <= 0.0 {
                return Err(Error::InvalidInput("fidelity weights sum to zero".into()));
            }
            let agree: f64 = preds
                .iter()
                .zip(labels)
                .zip(w)
                .filter(|((a, b), _)| a == b)
                .map(|(_, w)| w)
                .sum();
            Ok((agree / total).clamp(0.0, 1.0))
        }
    }
}

/// First 16 hex digits of SHA-256 over the compact JSON of the effective configuration.
pub fn config_digest<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let hash = Sha256::digest(json.as_bytes());
    hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct EffectiveConfig<'a> {
    strategy: &'a StrategyConfig,
    surrogate: &'a SurrogateConfig,
}

/// A finished explain run: the neighbourhood the surrogate saw and the explanation.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub neighbourhood: Neighbourhood,
    pub explanation: Explanation,
}

fn check_dims(model: &dyn BlackBox, data: &Dataset, z_e: &Instance) -> Result<()> {
    let d = z_e.dim();
    for got in [model.n_features(), data.n_features()] {
        if got != d {
            return Err(Error::DimensionMismatch { expected: d, got });
        }
    }
    Ok(())
}

/// Agreement between the additive coalition model `base + sum(phi on S)` and
/// the coalition values, both thresholded at 0.5, under the kernel weights.
fn coalition_fidelity(problem: &ShapleyProblem, values: &ShapleyValues) -> Result<f64> {
    let mut preds = Vec::with_capacity(problem.masks.len());
    let mut labels = Vec::with_capacity(problem.masks.len());
    for (mask, &y) in problem.masks.iter().zip(&problem.targets) {
        let g = values.base_value
            + mask
                .iter()
                .zip(&values.phi)
                .filter(|(m, _)| **m)
                .map(|(_, p)| p)
                .sum::<f64>();
        preds.push(u8::from(g >= 0.5));
        labels.push(u8::from(y >= 0.5));
    }
    if preds.is_empty() {
        return Ok(1.0);
    }
    fidelity(&preds, &labels, Some(&problem.weights))
}

/// Runs the strategy with the root seed's sub-seed and fits the surrogate.
pub fn run(
    model: &dyn BlackBox,
    data: &Dataset,
    z_e: &Instance,
    strategy: &StrategyConfig,
    surrogate: &SurrogateConfig,
    seed: u64,
) -> Result<Run> {
    check_dims(model, data, z_e)?;
    let id = strategy.id();
    let sub_seed = id.sub_seed(seed);
    let config_digest = config_digest(&EffectiveConfig { strategy, surrogate });
    let mut shapley = None;
    let hood = match strategy {
        StrategyConfig::Lime(c) => lime_neighbourhood(model, data, z_e, c, sub_seed)?,
        StrategyConfig::Gsls(c) => gsls_neighbourhood(model, z_e, &c.resolve(data), sub_seed)?,
        StrategyConfig::Lore(c) => lore_neighbourhood(model, data, z_e, c, sub_seed)?,
        StrategyConfig::Leap(c) => leap_neighbourhood(model, data, z_e, c, sub_seed)?,
        StrategyConfig::Palex(c) => palex_neighbourhood(model, data, z_e, c, sub_seed)?,
        StrategyConfig::Kernelshap(c) => {
            if z_e.dim() < 2 {
                return Err(Error::InvalidInput("KernelSHAP needs at least two features".into()));
            }
            let bg = resolve_background(data, c.background, sub_seed)?;
            let source = match c.mode {
                SubsetMode::Full => SubsetSource::Full,
                SubsetMode::Sampled { m } => SubsetSource::Sampled { m, seed: sub_seed },
            };
            let problem = ShapleyProblem::build(model, z_e, &bg, source)?;
            let hood = coalition_cloud(model, z_e, &bg, &problem.masks, sub_seed)?;
            shapley = Some(problem);
            hood
        }
    };

    let (attribution, base_value, tree, fid) = match *surrogate {
        SurrogateConfig::Ridge { lambda } => {
            let fit = fit_weighted_ridge(&hood.points, &hood.bb_probas, hood.weights.as_deref(), lambda)?;
            let preds: Vec<u8> = hood.points.iter().map(|p| fit.predict_label(p)).collect();
            let fid = fidelity(&preds, &hood.bb_labels, hood.weights.as_deref())?;
            (Some(attribution_of(&fit)), Some(fit.intercept), None, fid)
        }
        SurrogateConfig::Tree {
            max_depth,
            min_leaf_weight,
        } => {
            let fit = fit_tree(
                &hood.points,
                &hood.bb_labels,
                hood.weights.as_deref(),
                max_depth,
                min_leaf_weight,
            )?;
            let preds: Vec<u8> = hood.points.iter().map(|p| fit.predict(p)).collect();
            let fid = fidelity(&preds, &hood.bb_labels, hood.weights.as_deref())?;
            (None, None, Some(fit.rules(&data.feature_names())), fid)
        }
        SurrogateConfig::ShapleyKernel => {
            let problem = shapley.as_ref().ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "the shapley_kernel surrogate only applies to kernelshap, not {id}"
                ))
            })?;
            let values = problem.solve()?;
            let fid = coalition_fidelity(problem, &values)?;
            (Some(values.phi), Some(values.base_value), None, fid)
        }
    };

    let explanation = Explanation {
        method: id,
        surrogate: surrogate.name().to_string(),
        attribution,
        base_value,
        tree,
        fidelity: fid,
        seed,
        config_digest,
        tool_version: TOOL_VERSION.to_string(),
        warnings: hood.warnings.clone(),
    };
    Ok(Run {
        neighbourhood: hood,
        explanation,
    })
}

pub fn explain(
    model: &dyn BlackBox,
    data: &Dataset,
    z_e: &Instance,
    strategy: &StrategyConfig,
    surrogate: &SurrogateConfig,
    seed: u64,
) -> Result<Explanation> {
    run(model, data, z_e, strategy, surrogate, seed).map(|r| r.explanation)
}

#[derive(Serialize)]
struct ExactConfig<'a> {
    exact_shapley: &'a BackgroundSource,
}

/// Explanation document from the brute-force oracle. Fidelity is measured in
/// coalition space over every proper coalition, as for KernelSHAP.
pub fn exact_explanation(
    model: &dyn BlackBox,
    data: &Dataset,
    z_e: &Instance,
    background: BackgroundSource,
    seed: u64,
) -> Result<Explanation> {
    check_dims(model, data, z_e)?;
    let bg = resolve_background(data, background, StrategyId::Kernelshap.sub_seed(seed))?;
    let values = exact_shapley(model, z_e, &bg)?;
    let problem = ShapleyProblem::build(model, z_e, &bg, SubsetSource::Full)?;
    let fid = coalition_fidelity(&problem, &values)?;
    Ok(Explanation {
        method: StrategyId::Kernelshap,
        surrogate: "exact_shapley".into(),
        attribution: Some(values.phi),
        base_value: Some(values.base_value),
        tree: None,
        fidelity: fid,
        seed,
        config_digest: config_digest(&ExactConfig {
            exact_shapley: &background,
        }),
        tool_version: TOOL_VERSION.to_string(),
        warnings: Vec::new(),
    })
}
