use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Tunable;
use crate::error::{Error, Result};
use crate::seeded_rng;
use crate::types::{BlackBox, Dataset, Instance, Neighbourhood, StrategyId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimeConfig {
    pub sample_count: usize,
    /// Per-feature standard deviation; `auto` uses the training std.
    pub sigma: Tunable<Vec<f64>>,
    /// Kernel width; `auto` is `sqrt(d)^0.75`.
    pub gamma: Tunable<f64>,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig {
            sample_count: 5000,
            sigma: Tunable::Auto,
            gamma: Tunable::Auto,
        }
    }
}

/// `sqrt(d)^0.75`, the reference implementation's default kernel width.
pub fn default_kernel_width(d: usize) -> f64 {
    (d as f64).sqrt().powf(0.75)
}

/// `w_i = exp(-|z_i - z_e|^2 / gamma)`. Note the division is by `gamma`, not `gamma^2`.
pub fn lime_weights(points: &[Vec<f64>], z_e: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "kernel width must be positive, got {gamma}"
        )));
    }
    points
        .iter()
        .map(|p| {
            if p.len() != z_e.len() {
                return Err(Error::DimensionMismatch {
                    expected: z_e.len(),
                    got: p.len(),
                });
            }
            let sq: f64 = p.iter().zip(z_e).map(|(a, b)| (a - b) * (a - b)).sum();
            if !sq.is_finite() {
                return Err(Error::InvalidInput("non-finite distance to the instance".into()));
            }
            Ok((-sq / gamma).exp())
        })
        .collect()
}

/// I.i.d. draws from the axis-aligned Gaussian `N(z_e, diag(sigma^2))`, weighted by [`lime_weights`].
pub fn lime_neighbourhood(
    model: &dyn BlackBox,
    data: &Dataset,
    z_e: &Instance,
    cfg: &LimeConfig,
    seed: u64,
) -> Result<Neighbourhood> {
    let d = z_e.dim();
    if cfg.sample_count == 0 {
        return Err(Error::InvalidConfig("LIME sample count must be at least 1".into()));
    }
    let sigma = match &cfg.sigma {
        Tunable::Auto => {
            if data.n_features() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: data.n_features(),
                });
            }
            let stds = data.stds();
            if let Some(j) = stds.iter().position(|s| *s <= 0.0) {
                return Err(Error::ZeroSpread {
                    feature: j,
                    context: "LIME needs a positive std per feature; pass sigma explicitly",
                });
            }
            stds
        }
        Tunable::Fixed(s) => {
            if s.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: s.len(),
                });
            }
            if s.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidConfig("LIME sigma entries must be positive".into()));
            }
            s.clone()
        }
    };
    let gamma = match cfg.gamma {
        Tunable::Auto => default_kernel_width(d),
        Tunable::Fixed(g) => g,
    };

    let mut rng = seeded_rng(seed);
    let points: Vec<Vec<f64>> = (0..cfg.sample_count)
        .map(|_| {
            z_e.iter()
                .zip(&sigma)
                .map(|(c, s)| {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    c + s * n
                })
                .collect()
        })
        .collect();
    let weights = lime_weights(&points, z_e, gamma)?;
    Neighbourhood::label(model, points, Some(weights), StrategyId::Lime, seed)
}
