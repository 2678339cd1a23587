//! Genetic neighbourhood: two GA runs, one breeding same-class instances and
//! one breeding opposite-class instances, both pulled towards the instance.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeded_rng;
use crate::types::{BlackBox, Dataset, FeatureKind, FeatureMeta, Instance, Neighbourhood, StrategyId};

/// Std of the jitter added to resampled continuous values, in units of the feature std.
const MUTATION_JITTER: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoreConfig {
    /// Total neighbourhood size, split evenly between the two GA runs.
    pub size: usize,
    pub population: usize,
    pub generations: usize,
    pub crossover: f64,
    pub mutation: f64,
    pub tournament: usize,
    pub elitism: usize,
}

impl Default for LoreConfig {
    fn default() -> Self {
        LoreConfig {
            size: 200,
            population: 200,
            generations: 20,
            crossover: 0.5,
            mutation: 0.2,
            tournament: 3,
            elitism: 2,
        }
    }
}

impl LoreConfig {
    fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(format!("LORE: {msg}")));
        if self.size == 0 || !self.size.is_multiple_of(2) {
            return bad("size must be even and positive");
        }
        if self.population < 2 {
            return bad("population must be at least 2");
        }
        if self.population < self.size / 2 {
            return bad("population must hold at least size / 2 individuals");
        }
        if !(0.0..=1.0).contains(&self.crossover) || !(0.0..=1.0).contains(&self.mutation) {
            return bad("probabilities must lie in [0, 1]");
        }
        if self.tournament == 0 {
            return bad("tournament size must be positive");
        }
        if self.elitism > self.population {
            return bad("elitism cannot exceed the population");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LoreTarget {
    Same,
    Different,
}

/// Mixed distance in `[0, 1]`: categorical features contribute their mismatch
/// ratio, continuous features their range-scaled euclidean distance divided by
/// `sqrt(m_cont)`, each block weighted by its share of the `d` features.
pub fn lore_distance(x: &[f64], z: &[f64], meta: &[FeatureMeta]) -> Result<f64> {
    let d = meta.len();
    if x.len() != d || z.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.len().min(z.len()),
        });
    }
    let (mut m_cat, mut m_cont) = (0usize, 0usize);
    let (mut mismatches, mut sq) = (0usize, 0.0);
    for (j, m) in meta.iter().enumerate() {
        match m.kind {
            FeatureKind::Categorical => {
                m_cat += 1;
                if x[j] != z[j] {
                    mismatches += 1;
                }
            }
            FeatureKind::Continuous => {
                m_cont += 1;
                let range = m.range();
                if range <= 0.0 {
                    return Err(Error::ZeroSpread {
                        feature: j,
                        context: "LORE scales continuous features by their training range",
                    });
                }
                sq += ((x[j] - z[j]) / range).powi(2);
            }
        }
    }
    let mut dist = 0.0;
    if m_cat > 0 {
        dist += (m_cat as f64 / d as f64) * (mismatches as f64 / m_cat as f64);
    }
    if m_cont > 0 {
        dist += (m_cont as f64 / d as f64) * (sq.sqrt() / (m_cont as f64).sqrt());
    }
    Ok(dist.clamp(0.0, 1.0))
}

/// `1[label test] + (1 - distance) - 1[z == z_e]`.
pub fn fitness_value(target: LoreTarget, same_label: bool, distance: f64, identical: bool) -> f64 {
    let hit = match target {
        LoreTarget::Same => same_label,
        LoreTarget::Different => !same_label,
    };
    f64::from(u8::from(hit)) + (1.0 - distance) - f64::from(u8::from(identical))
}

pub fn lore_fitness(
    model: &dyn BlackBox,
    z: &[f64],
    z_e: &[f64],
    target: LoreTarget,
    meta: &[FeatureMeta],
) -> Result<f64> {
    let distance = lore_distance(z_e, z, meta)?;
    let same = model.predict_label(z) == model.predict_label(z_e);
    Ok(fitness_value(target, same, distance, z == z_e))
}

/// Final state of one GA run.
#[derive(Debug, Clone)]
pub struct GaRun {
    pub population: Vec<Vec<f64>>,
    pub fitness: Vec<f64>,
    /// Best fitness of the initial population, then after each generation.
    pub best_per_generation: Vec<f64>,
}

struct Evaluator<'a> {
    model: &'a dyn BlackBox,
    z_e: &'a [f64],
    label: u8,
    target: LoreTarget,
    meta: &'a [FeatureMeta],
}

impl Evaluator<'_> {
    fn fitness(&self, z: &[f64]) -> Result<f64> {
        let distance = lore_distance(self.z_e, z, self.meta)?;
        let same = self.model.predict_label(z) == self.label;
        Ok(fitness_value(self.target, same, distance, z == self.z_e))
    }
}

fn tournament<R: Rng + ?Sized>(rng: &mut R, fitness: &[f64], size: usize) -> usize {
    let mut best = rng.random_range(0..fitness.len());
    for _ in 1..size {
        let challenger = rng.random_range(0..fitness.len());
        if fitness[challenger] > fitness[best] {
            best = challenger;
        }
    }
    best
}

/// Indices ordered by decreasing fitness, ties by index.
fn ranked(fitness: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..fitness.len()).collect();
    order.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
    order
}

/// Runs one GA from a population of copies of `z_e`.
pub fn run_lore_ga<R: Rng + ?Sized>(
    model: &dyn BlackBox,
    data: &Dataset,
    z_e: &[f64],
    target: LoreTarget,
    cfg: &LoreConfig,
    rng: &mut R,
) -> Result<GaRun> {
    cfg.validate()?;
    let meta = data.meta();
    let eval = Evaluator {
        model,
        z_e,
        label: model.predict_label(z_e),
        target,
        meta,
    };
    let jitter: Vec<Option<Normal<f64>>> = meta
        .iter()
        .map(|m| match m.kind {
            FeatureKind::Continuous if m.std > 0.0 => {
                Some(Normal::new(0.0, MUTATION_JITTER * m.std).expect("finite std"))
            }
            _ => None,
        })
        .collect();

    let mut population = vec![z_e.to_vec(); cfg.population];
    let mut fitness = population.iter().map(|z| eval.fitness(z)).collect::<Result<Vec<_>>>()?;
    let mut best = vec![fitness.iter().copied().fold(f64::NEG_INFINITY, f64::max)];

    for _ in 0..cfg.generations {
        let order = ranked(&fitness);
        let mut next: Vec<Vec<f64>> = order[..cfg.elitism].iter().map(|&i| population[i].clone()).collect();
        let mut next_fitness: Vec<f64> = order[..cfg.elitism].iter().map(|&i| fitness[i]).collect();

        while next.len() < cfg.population {
            let a = tournament(rng, &fitness, cfg.tournament);
            let b = tournament(rng, &fitness, cfg.tournament);
            let mut child = if rng.random::<f64>() < cfg.crossover {
                population[a]
                    .iter()
                    .zip(&population[b])
                    .map(|(&x, &y)| if rng.random::<bool>() { x } else { y })
                    .collect()
            } else {
                population[a].clone()
            };
            for (j, gene) in child.iter_mut().enumerate() {
                if rng.random::<f64>() < cfg.mutation {
                    let donor = data.row(rng.random_range(0..data.n_rows()))[j];
                    *gene = match &jitter[j] {
                        Some(noise) => donor + noise.sample(rng),
                        None => donor,
                    };
                }
            }
            next_fitness.push(eval.fitness(&child)?);
            next.push(child);
        }
        population = next;
        fitness = next_fitness;
        best.push(fitness.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    }

    Ok(GaRun {
        population,
        fitness,
        best_per_generation: best,
    })
}

/// The `k` fittest individuals, taking each distinct point once before any
/// duplicate; duplicates then follow in fitness order.
fn top_distinct(run: &GaRun, k: usize) -> Vec<Vec<f64>> {
    let order = ranked(&run.fitness);
    let mut picked: Vec<usize> = Vec::with_capacity(k);
    let mut repeats = Vec::new();
    for &i in &order {
        let z = &run.population[i];
        if picked.iter().any(|&p| run.population[p] == *z) {
            repeats.push(i);
        } else {
            picked.push(i);
        }
    }
    picked.extend(repeats);
    picked.truncate(k);
    picked.into_iter().map(|i| run.population[i].clone()).collect()
}

/// Top `size / 2` individuals of the same-class run followed by the top
/// `size / 2` of the opposite-class run, distinct points first; no weights.
pub fn lore_neighbourhood(
    model: &dyn BlackBox,
    data: &Dataset,
    z_e: &Instance,
    cfg: &LoreConfig,
    seed: u64,
) -> Result<Neighbourhood> {
    cfg.validate()?;
    if data.n_features() != z_e.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.n_features(),
            got: z_e.dim(),
        });
    }
    let mut rng = seeded_rng(seed);
    let half = cfg.size / 2;
    let mut points = Vec::with_capacity(cfg.size);
    for target in [LoreTarget::Same, LoreTarget::Different] {
        let run = run_lore_ga(model, data, z_e, target, cfg, &mut rng)?;
        points.extend(top_distinct(&run, half));
    }
    let label = model.predict_label(z_e);
    let mut hood = Neighbourhood::label(model, points, None, StrategyId::Lore, seed)?;
    if !hood.bb_labels[half..].iter().any(|&y| y != label) {
        hood.warnings.push(format!(
            "LORE: no opposite-class instance found after {} generations; neighbourhood is one-class",
            cfg.generations
        ));
    }
    Ok(hood)
}
