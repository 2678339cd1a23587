use rand::seq::index::sample;

use super::Background;
use crate::error::{Error, Result};
use crate::sampling::squared_euclidean;
use crate::seeded_rng;
use crate::types::Dataset;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares after each assignment step.
    pub wcss_history: Vec<f64>,
}

impl KMeans {
    pub fn background(&self) -> Background {
        Background::new(self.centroids.clone()).expect("k >= 1 centroids of equal length")
    }
}

fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    centroids
        .iter()
        .enumerate()
        .map(|(c, centre)| (c, squared_euclidean(centre, x)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

/// Lloyd's iterations from `k` distinct rows chosen by `seed`. Stops early
/// once assignments stop changing; an empty cluster keeps its centroid.
pub fn kmeans_background(data: &Dataset, k: usize, iterations: usize, seed: u64) -> Result<KMeans> {
    let n = data.n_rows();
    if k == 0 || k > n {
        return Err(Error::InvalidConfig(format!(
            "k-means needs 1 <= k <= n = {n}, got {k}"
        )));
    }
    let d = data.n_features();
    let mut rng = seeded_rng(seed);
    let mut centroids: Vec<Vec<f64>> = sample(&mut rng, n, k).iter().map(|i| data.row(i).to_vec()).collect();
    let mut assignment = vec![usize::MAX; n];
    let mut wcss_history = Vec::new();

    for _ in 0..iterations.max(1) {
        let mut changed = false;
        let mut wcss = 0.0;
        for (i, row) in data.rows().iter().enumerate() {
            let (c, dist) = nearest(&centroids, row);
            wcss += dist;
            if assignment[i] != c {
                assignment[i] = c;
                changed = true;
            }
        }
        wcss_history.push(wcss);
        if !changed {
            break;
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for (row, &c) in data.rows().iter().zip(&assignment) {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(row) {
                *s += v;
            }
        }
        for (c, centre) in centroids.iter_mut().enumerate() {
            if counts[c] > 0 {
                *centre = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }
    Ok(KMeans {
        centroids,
        wcss_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn k_equals_n_returns_the_rows() {
        let rows = vec![vec![0.0, 1.0], vec![2.0, 3.0], vec![5.0, -1.0]];
        let data = Dataset::new(rows.clone(), None).unwrap();
        let mut centroids = kmeans_background(&data, 3, 10, 1).unwrap().centroids;
        centroids.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(centroids, rows);
        assert!(kmeans_background(&data, 4, 10, 1).is_err());
    }

    #[test]
    fn separated_blobs_are_recovered_and_wcss_falls() {
        let mut rng = seeded_rng(2);
        let mut rows = Vec::new();
        for centre in [[-5.0, 0.0], [5.0, 2.0]] {
            for _ in 0..100 {
                rows.push(vec![
                    centre[0] + rng.random_range(-0.5..0.5),
                    centre[1] + rng.random_range(-0.5..0.5),
                ]);
            }
        }
        let means = [[-5.0, 0.0], [5.0, 2.0]].map(|c: [f64; 2]| c);
        let data = Dataset::new(rows.clone(), None).unwrap();
        let km = kmeans_background(&data, 2, 50, 7).unwrap();
        let blob_mean = |lo: usize| {
            let s = &rows[lo..lo + 100];
            [
                s.iter().map(|r| r[0]).sum::<f64>() / 100.0,
                s.iter().map(|r| r[1]).sum::<f64>() / 100.0,
            ]
        };
        for (b, _) in means.iter().enumerate() {
            let m = blob_mean(b * 100);
            assert!(km
                .centroids
                .iter()
                .any(|c| (c[0] - m[0]).abs() < 0.1 && (c[1] - m[1]).abs() < 0.1));
        }
        assert!(km.wcss_history.windows(2).all(|w| w[1] <= w[0]));
    }
}
