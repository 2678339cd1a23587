//! Local surrogate explanations under one two-step pipeline: generate a
//! neighbourhood around the instance, then fit an interpretable model to the
//! black box's behaviour on it.
//!
//! Six neighbourhood strategies share the [`Neighbourhood`] type: LIME, GSLS,
//! LORE, LEAP (in [`neighbourhood`]), KernelSHAP (in [`shapley`], next to the
//! exact brute-force Shapley oracle) and PALEX (in [`patterns`]).

pub mod blackbox;
pub mod data;
pub mod error;
pub mod neighbourhood;
pub mod patterns;
pub mod pipeline;
pub mod render;
pub mod shapley;
pub mod surrogate;
pub mod types;

mod sampling;

pub use error::{Error, Result};
pub use pipeline::{explain, fidelity, StrategyConfig, SurrogateConfig};

pub use types::{
    BlackBox, Dataset, Explanation, FeatureKind, FeatureMeta, FnModel, Instance, Neighbourhood, StrategyId,
    TOOL_VERSION,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
