use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use locality_core::neighbourhood::{LeapConfig, LimeConfig, LoreConfig};
use locality_core::patterns::PalexConfig;
use locality_core::pipeline::{BackgroundSource, GslsSettings, KernelShapConfig};
use locality_core::{StrategyConfig, StrategyId, SurrogateConfig};
use serde::{Deserialize, Serialize};

/// Everything a run can be configured with. Command-line flags win over
/// values read from the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub lime: LimeConfig,
    pub gsls: GslsSettings,
    pub lore: LoreConfig,
    pub leap: LeapConfig,
    pub kernelshap: KernelShapConfig,
    pub palex: PalexConfig,
    /// Per-method surrogate overrides, keyed by method name.
    pub surrogate: BTreeMap<StrategyId, SurrogateConfig>,
    pub exact: ExactSettings,
    pub render: RenderSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExactSettings {
    pub background: BackgroundSource,
}

impl Default for ExactSettings {
    fn default() -> Self {
        ExactSettings {
            background: KernelShapConfig::default().background,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderSettings {
    pub resolution: usize,
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings { resolution: 200 }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn strategy(&self, id: StrategyId) -> StrategyConfig {
        match id {
            StrategyId::Lime => StrategyConfig::Lime(self.lime.clone()),
            StrategyId::Gsls => StrategyConfig::Gsls(self.gsls.clone()),
            StrategyId::Lore => StrategyConfig::Lore(self.lore),
            StrategyId::Leap => StrategyConfig::Leap(self.leap.clone()),
            StrategyId::Kernelshap => StrategyConfig::Kernelshap(self.kernelshap),
            StrategyId::Palex => StrategyConfig::Palex(self.palex.clone()),
        }
    }

    /// The file's surrogate for `id` unless `kind` names a different one,
    /// which then takes its default parameters.
    pub fn surrogate(&self, id: StrategyId, kind: Option<SurrogateKind>) -> SurrogateConfig {
        let configured = self
            .surrogate
            .get(&id)
            .copied()
            .unwrap_or_else(|| SurrogateConfig::default_for(id));
        match kind {
            None => configured,
            Some(k) if k.matches(&configured) => configured,
            Some(k) => k.default_config(),
        }
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SurrogateKind {
    Ridge,
    Tree,
    ShapleyKernel,
}

impl SurrogateKind {
    fn matches(self, cfg: &SurrogateConfig) -> bool {
        matches!(
            (self, cfg),
            (SurrogateKind::Ridge, SurrogateConfig::Ridge { .. })
                | (SurrogateKind::Tree, SurrogateConfig::Tree { .. })
                | (SurrogateKind::ShapleyKernel, SurrogateConfig::ShapleyKernel)
        )
    }

    fn default_config(self) -> SurrogateConfig {
        match self {
            SurrogateKind::Ridge => SurrogateConfig::default_for(StrategyId::Lime),
            SurrogateKind::Tree => SurrogateConfig::default_for(StrategyId::Lore),
            SurrogateKind::ShapleyKernel => SurrogateConfig::ShapleyKernel,
        }
    }
}
