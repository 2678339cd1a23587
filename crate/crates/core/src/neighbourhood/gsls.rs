use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{euclidean, uniform_in_shell};
use crate::seeded_rng;
use crate::types::{BlackBox, Dataset, Instance, Neighbourhood, StrategyId};

/// Maximum number of times the initial ball is halved.
const MAX_HALVINGS: usize = 60;

/// Parameters of the Growing Spheres counterfactual search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowingSpheres {
    /// Initial radius and layer width.
    pub eta: f64,
    pub max_radius: f64,
    pub layer_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GslsConfig {
    /// Radius of the sampling ball around the counterfactual.
    pub radius: f64,
    pub sample_count: usize,
    pub eta: f64,
    pub max_radius: f64,
    pub layer_samples: usize,
}

impl GslsConfig {
    /// Data-scaled defaults: `eta` is a tenth of the mean feature range, the
    /// sampling radius twice that, and the search stops at ten times the
    /// bounding-box diagonal.
    pub fn for_data(data: &Dataset) -> Self {
        let ranges: Vec<f64> = data.meta().iter().map(|m| m.range()).collect();
        let mean_range = ranges.iter().sum::<f64>() / ranges.len() as f64;
        let diagonal = ranges.iter().map(|r| r * r).sum::<f64>().sqrt();
        let eta = if mean_range > 0.0 { 0.1 * mean_range } else { 0.1 };
        GslsConfig {
            radius: 2.0 * eta,
            sample_count: 5000,
            eta,
            max_radius: (10.0 * diagonal).max(eta),
            layer_samples: 200,
        }
    }

    pub fn search(&self) -> GrowingSpheres {
        GrowingSpheres {
            eta: self.eta,
            max_radius: self.max_radius,
            layer_samples: self.layer_samples,
        }
    }

    fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.radius) || !positive(self.eta) || !positive(self.max_radius) {
            return Err(Error::InvalidConfig(
                "GSLS radius, eta and max_radius must be positive".into(),
            ));
        }
        if self.max_radius < self.eta {
            return Err(Error::InvalidConfig("GSLS max_radius must be at least eta".into()));
        }
        if self.sample_count == 0 || self.layer_samples == 0 {
            return Err(Error::InvalidConfig("GSLS sample counts must be positive".into()));
        }
        Ok(())
    }
}

fn closest_enemy(model: &dyn BlackBox, z_e: &[f64], label: u8, candidates: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    candidates
        .into_iter()
        .filter(|c| model.predict_label(c) != label)
        .map(|c| (euclidean(&c, z_e), c))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c)| c)
}

/// Finds a nearby point the model labels differently from `z_e`.
///
/// Samples the ball of radius `eta`; while it holds enemies the radius is
/// halved. From the enemy-free radius `a`, shells `[a, a + step]` are sampled
/// outward (step = the final radius) and the closest enemy of the first shell
/// containing one is returned.
pub fn growing_spheres_counterfactual<R: Rng + ?Sized>(
    model: &dyn BlackBox,
    z_e: &[f64],
    params: &GrowingSpheres,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(params.eta > 0.0 && params.eta.is_finite()) || params.layer_samples == 0 {
        return Err(Error::InvalidConfig(
            "growing spheres needs eta > 0 and layer samples > 0".into(),
        ));
    }
    let label = model.predict_label(z_e);
    let sample = |rng: &mut R, inner: f64, outer: f64| -> Vec<Vec<f64>> {
        (0..params.layer_samples)
            .map(|_| uniform_in_shell(rng, z_e, inner, outer))
            .collect()
    };

    let mut radius = params.eta;
    let mut last_enemy = None;
    for _ in 0..MAX_HALVINGS {
        match closest_enemy(model, z_e, label, sample(rng, 0.0, radius)) {
            Some(enemy) => {
                last_enemy = Some(enemy);
                radius /= 2.0;
            }
            None => {
                last_enemy = None;
                break;
            }
        }
    }
    if let Some(enemy) = last_enemy {
        // z_e sits on the boundary to within eta / 2^60
        return Ok(enemy);
    }

    let step = radius;
    let mut inner = radius;
    while inner < params.max_radius {
        let outer = inner + step;
        if let Some(enemy) = closest_enemy(model, z_e, label, sample(rng, inner, outer)) {
            return Ok(enemy);
        }
        inner = outer;
    }
    Err(Error::NoCounterfactual {
        max_radius: params.max_radius,
    })
}

/// Uniform sample of the ball `B(CF(z_e), radius)`; no weights.
pub fn gsls_neighbourhood(model: &dyn BlackBox, z_e: &Instance, cfg: &GslsConfig, seed: u64) -> Result<Neighbourhood> {
    cfg.validate()?;
    let mut rng = seeded_rng(seed);
    let cf = growing_spheres_counterfactual(model, z_e, &cfg.search(), &mut rng)?;
    let points = (0..cfg.sample_count)
        .map(|_| uniform_in_shell(&mut rng, &cf, 0.0, cfg.radius))
        .collect();
    let mut hood = Neighbourhood::label(model, points, None, StrategyId::Gsls, seed)?;
    hood.anchor = Some(cf);
    Ok(hood)
}
