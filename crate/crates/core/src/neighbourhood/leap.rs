//! LIME run inside a locally fitted linear subspace whose dimension is the
//! estimated local intrinsic dimensionality.

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{default_kernel_width, lime_weights, Tunable};
use crate::error::{Error, Result};
use crate::sampling::nearest_rows;
use crate::seeded_rng;
use crate::types::{BlackBox, Dataset, Instance, Neighbourhood, StrategyId};

/// Eigenvalues below this fraction of the largest count as zero.
const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeapConfig {
    pub k_lid: usize,
    pub k_pca: usize,
    pub sample_count: usize,
    /// Std of the subspace Gaussian; `auto` uses each component's std over the neighbours.
    pub sigma: Tunable<f64>,
    /// Kernel width in the subspace; `auto` is `sqrt(dim)^0.75`.
    pub gamma: Tunable<f64>,
}

impl Default for LeapConfig {
    fn default() -> Self {
        LeapConfig {
            k_lid: 20,
            k_pca: 100,
            sample_count: 5000,
            sigma: Tunable::Auto,
            gamma: Tunable::Auto,
        }
    }
}

/// Maximum-likelihood LID from the `k` nearest non-zero neighbour distances:
/// `-1 / mean(ln(r_i / r_k))`.
pub fn lid_estimate(data: &Dataset, z_e: &[f64], k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidConfig(format!("LID needs k >= 2, got {k}")));
    }
    if data.n_features() != z_e.len() {
        return Err(Error::DimensionMismatch {
            expected: data.n_features(),
            got: z_e.len(),
        });
    }
    let distances: Vec<f64> = nearest_rows(data.rows(), z_e)
        .into_iter()
        .map(|(_, r)| r)
        .filter(|&r| r > 0.0)
        .take(k)
        .collect();
    if distances.len() < k {
        return Err(Error::DegenerateDistances(format!(
            "only {} neighbours at positive distance, need {k}",
            distances.len()
        )));
    }
    let r_k = distances[k - 1];
    let mean_log = distances.iter().map(|r| (r / r_k).ln()).sum::<f64>() / k as f64;
    if mean_log == 0.0 {
        return Err(Error::DegenerateDistances("all neighbour distances are equal".into()));
    }
    Ok(-1.0 / mean_log)
}

/// PCA fitted on the nearest neighbours of an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalPca {
    pub mean: Vec<f64>,
    /// `out_dim` orthonormal rows, ordered by decreasing variance.
    pub components: Vec<Vec<f64>>,
    /// Variance of the neighbours along each component.
    pub variances: Vec<f64>,
    pub warnings: Vec<String>,
}

impl LocalPca {
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().zip(x).zip(&self.mean).map(|((c, x), m)| c * (x - m)).sum())
            .collect()
    }

    /// `mean + components^T * coords`.
    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, &a) in self.components.iter().zip(coords) {
            for (o, v) in out.iter_mut().zip(c) {
                *o += a * v;
            }
        }
        out
    }

    /// Distance from `x` to the affine span `mean + span(components)`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let back = self.reconstruct(&self.project(x));
        back.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }
}

pub fn local_pca(data: &Dataset, z_e: &[f64], k_pca: usize, out_dim: usize) -> Result<LocalPca> {
    let d = data.n_features();
    if z_e.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: z_e.len(),
        });
    }
    if out_dim == 0 || out_dim > d {
        return Err(Error::InvalidConfig(format!(
            "PCA output dimension must be in 1..={d}, got {out_dim}"
        )));
    }
    if k_pca == 0 {
        return Err(Error::InvalidConfig("k_pca must be positive".into()));
    }
    let mut warnings = Vec::new();
    let k = if k_pca > data.n_rows() {
        warnings.push(format!("k_pca {k_pca} exceeds {} rows; using all rows", data.n_rows()));
        data.n_rows()
    } else {
        k_pca
    };
    let neighbours: Vec<&[f64]> = nearest_rows(data.rows(), z_e)
        .into_iter()
        .take(k)
        .map(|(i, _)| data.row(i))
        .collect();

    let mut mean = vec![0.0; d];
    for row in &neighbours {
        for (m, v) in mean.iter_mut().zip(row.iter()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= k as f64);
    let centred = DMatrix::from_fn(k, d, |i, j| neighbours[i][j] - mean[j]);
    let cov = (centred.transpose() * &centred) / k as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let rank = order
        .iter()
        .filter(|&&i| top > 0.0 && eig.eigenvalues[i] > RANK_TOLERANCE * top)
        .count();
    if rank == 0 {
        return Err(Error::DegenerateDistances(
            "local neighbours coincide; PCA has rank 0".into(),
        ));
    }
    let used = if out_dim > rank {
        warnings.push(format!("PCA dimension reduced from {out_dim} to the local rank {rank}"));
        rank
    } else {
        out_dim
    };

    let mut components = Vec::with_capacity(used);
    let mut variances = Vec::with_capacity(used);
    for &i in &order[..used] {
        let mut c: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        // sign convention: largest-magnitude entry positive
        let pivot = c
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|(j, _)| j)
            .unwrap_or(0);
        if c[pivot] < 0.0 {
            c.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(c);
        variances.push(eig.eigenvalues[i].max(0.0));
    }
    Ok(LocalPca {
        mean,
        components,
        variances,
        warnings,
    })
}

/// LID picks the subspace dimension, local PCA the subspace; Gaussian samples
/// around the projected instance are weighted there and mapped back to `R^d`.
pub fn leap_neighbourhood(
    model: &dyn BlackBox,
    data: &Dataset,
    z_e: &Instance,
    cfg: &LeapConfig,
    seed: u64,
) -> Result<Neighbourhood> {
    if cfg.sample_count == 0 {
        return Err(Error::InvalidConfig("LEAP sample count must be positive".into()));
    }
    if cfg.k_lid > data.n_rows() {
        return Err(Error::InvalidConfig(format!(
            "k_lid {} exceeds the {} training rows",
            cfg.k_lid,
            data.n_rows()
        )));
    }
    let d = z_e.dim();
    let lid = lid_estimate(data, z_e, cfg.k_lid)?;
    let out_dim = (lid.round() as usize).clamp(1, d);
    let pca = local_pca(data, z_e, cfg.k_pca, out_dim)?;
    let centre = pca.project(z_e);
    let sigma: Vec<f64> = match cfg.sigma {
        Tunable::Auto => pca.variances.iter().map(|v| v.sqrt()).collect(),
        Tunable::Fixed(s) if s > 0.0 && s.is_finite() => vec![s; pca.dim()],
        Tunable::Fixed(s) => return Err(Error::InvalidConfig(format!("LEAP sigma must be positive, got {s}"))),
    };
    let gamma = match cfg.gamma {
        Tunable::Auto => default_kernel_width(pca.dim()),
        Tunable::Fixed(g) => g,
    };

    let mut rng = seeded_rng(seed);
    let coords: Vec<Vec<f64>> = (0..cfg.sample_count)
        .map(|_| {
            centre
                .iter()
                .zip(&sigma)
                .map(|(c, s)| {
                    let n: f64 = StandardNormal.sample(&mut rng);
                    c + s * n
                })
                .collect()
        })
        .collect();
    let weights = lime_weights(&coords, &centre, gamma)?;
    let points = coords.iter().map(|c| pca.reconstruct(c)).collect();
    let mut hood = Neighbourhood::label(model, points, Some(weights), StrategyId::Leap, seed)?;
    hood.warnings
        .push(format!("LID {lid:.4}, subspace dimension {}", pca.dim()));
    hood.warnings.extend(pca.warnings);
    Ok(hood)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::FnModel;
    use rand::Rng;

    fn line_in_5d(seed: u64) -> Dataset {
        let mut rng = seeded_rng(seed);
        let dir = [1.0, 2.0, -1.0, 0.5, 3.0];
        let rows = (0..1000)
            .map(|_| {
                let t: f64 = rng.random_range(-1.0..1.0);
                dir.iter().map(|v| v * t + 0.3).collect()
            })
            .collect();
        Dataset::new(rows, None).unwrap()
    }

    fn disc(seed: u64) -> Dataset {
        let mut rng = seeded_rng(seed);
        let rows = (0..1000)
            .map(|_| crate::sampling::uniform_in_shell(&mut rng, &[0.0, 0.0], 0.0, 1.0))
            .collect();
        Dataset::new(rows, None).unwrap()
    }

    // With the 1/k normalisation, sum_{i<k} ln(r_k / r_i) ~ Gamma(k - 1, m) for a
    // locally uniform m-dimensional sample, so E[LID] = k m / (k - 2) and
    // sd[LID] ~ E[LID] / sqrt(k - 3).
    fn check_mean_lid(sample: impl Fn(u64) -> (Dataset, Vec<f64>), m: f64) {
        let (k, runs) = (20usize, 60u64);
        let estimates: Vec<f64> = (0..runs)
            .map(|seed| {
                let (data, z_e) = sample(seed);
                lid_estimate(&data, &z_e, k).unwrap()
            })
            .collect();
        let mean = estimates.iter().sum::<f64>() / runs as f64;
        let expected = k as f64 * m / (k as f64 - 2.0);
        let stderr = expected / ((k - 3) as f64).sqrt() / (runs as f64).sqrt();
        assert!(
            (mean - expected).abs() < 4.0 * stderr,
            "mean LID {mean}, expected {expected}"
        );
    }

    #[test]
    fn lid_of_a_line_and_a_disc() {
        check_mean_lid(|s| (line_in_5d(s), vec![0.3; 5]), 1.0);
        check_mean_lid(|s| (disc(s), vec![0.0, 0.0]), 2.0);
    }

    #[test]
    fn lid_errors() {
        let data = Dataset::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]], None).unwrap();
        assert!(matches!(
            lid_estimate(&data, &[0.0, 0.0], 3),
            Err(Error::DegenerateDistances(_))
        ));
        assert!(lid_estimate(&data, &[0.0, 0.0], 1).is_err());
        assert!(lid_estimate(&data, &[0.0, 0.0], 4).is_err());
    }

    #[test]
    fn pca_on_an_affine_line_reconstructs_exactly() {
        let data = line_in_5d(2);
        let pca = local_pca(&data, &[0.3; 5], 50, 1).unwrap();
        for row in data.rows() {
            assert!(pca.residual(row) <= 1e-9);
        }
        let proj = pca.project(&pca.mean);
        assert!(proj.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn components_are_orthonormal_and_rank_is_respected() {
        let data = disc(3);
        let pca = local_pca(&data, &[0.1, 0.2], 100, 2).unwrap();
        for (a, ca) in pca.components.iter().enumerate() {
            for (b, cb) in pca.components.iter().enumerate() {
                let dot: f64 = ca.iter().zip(cb).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-10);
            }
        }
        assert!(pca.variances[0] >= pca.variances[1]);

        let line = line_in_5d(4);
        let reduced = local_pca(&line, &[0.3; 5], 50, 3).unwrap();
        assert_eq!(reduced.dim(), 1);
        assert_eq!(reduced.warnings.len(), 1);
        assert!(local_pca(&line, &[0.3; 5], 50, 6).is_err());
    }

    #[test]
    fn leap_points_lie_in_the_local_subspace() {
        let data = line_in_5d(5);
        let model = FnModel::new(5, |x: &[f64]| if x[0] > 0.3 { 0.7 } else { 0.2 });
        let z_e = Instance::new(vec![0.3; 5]).unwrap();
        let cfg = LeapConfig {
            sample_count: 500,
            ..LeapConfig::default()
        };
        let hood = leap_neighbourhood(&model, &data, &z_e, &cfg, 9).unwrap();
        assert_eq!(hood.len(), 500);
        let pca = local_pca(&data, &z_e, cfg.k_pca, 1).unwrap();
        assert!(hood.points.iter().all(|p| pca.residual(p) <= 1e-9));
        assert!(hood.weights.unwrap().iter().all(|w| *w > 0.0 && *w <= 1.0));
    }
}
