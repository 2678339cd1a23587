use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Uniform direction on the unit sphere in `d` dimensions.
pub(crate) fn unit_direction<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Uniform point in the spherical shell `inner <= |x - centre| <= outer`.
pub(crate) fn uniform_in_shell<R: Rng + ?Sized>(rng: &mut R, centre: &[f64], inner: f64, outer: f64) -> Vec<f64> {
    let d = centre.len();
    let dir = unit_direction(rng, d);
    let u: f64 = rng.random();
    let (lo, hi) = (inner.powi(d as i32), outer.powi(d as i32));
    let radius = (lo + u * (hi - lo)).powf(1.0 / d as f64).clamp(inner, outer);
    centre.iter().zip(dir).map(|(c, v)| c + radius * v).collect()
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

pub(crate) fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Indices of rows sorted by distance to `centre`, ties by index.
pub(crate) fn nearest_rows(rows: &[Vec<f64>], centre: &[f64]) -> Vec<(usize, f64)> {
    let mut dist: Vec<(usize, f64)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (i, euclidean(r, centre)))
        .collect();
    dist.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    dist
}
