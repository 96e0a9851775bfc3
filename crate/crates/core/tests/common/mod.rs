#![allow(dead_code)]

use dppc::PointSet;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn random_points<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> PointSet {
    let data = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    PointSet::new(data, n, d).unwrap()
}

/// `exp(-|x_i - x_j|^2 / s^2)`, written out independently of the library.
pub fn gaussian_l(points: &PointSet, s: f64) -> DMatrix<f64> {
    let n = points.len();
    DMatrix::from_fn(n, n, |i, j| {
        let d2: f64 = points
            .point(i)
            .iter()
            .zip(points.point(j))
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (-d2 / (s * s)).exp()
    })
}

pub fn members(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

pub fn mask_of(subset: &[usize]) -> usize {
    subset.iter().fold(0, |m, &i| m | 1 << i)
}

/// Subset probabilities proportional to `det(L_S)`, restricted to `|S| = size` when given.
pub fn enumerate(l: &DMatrix<f64>, size: Option<usize>) -> Vec<f64> {
    let n = l.nrows();
    let mut p = vec![0.0; 1 << n];
    for (mask, slot) in p.iter_mut().enumerate() {
        let s = members(mask, n);
        if size.is_some_and(|m| s.len() != m) {
            continue;
        }
        *slot = if s.is_empty() {
            1.0
        } else {
            l.select_rows(&s).select_columns(&s).determinant().max(0.0)
        };
    }
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    p
}

pub fn inclusion(p: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| p.iter().enumerate().filter(|(m, _)| m >> i & 1 == 1).map(|(_, v)| v).sum())
        .collect()
}

pub fn total_variation(exact: &[f64], counts: &[usize]) -> f64 {
    let draws: usize = counts.iter().sum();
    0.5 * exact
        .iter()
        .zip(counts)
        .map(|(p, &c)| (p - c as f64 / draws as f64).abs())
        .sum::<f64>()
}

/// `K = L (I + L)^{-1}`.
pub fn marginal_kernel(l: &DMatrix<f64>) -> DMatrix<f64> {
    let n = l.nrows();
    let inv = (DMatrix::identity(n, n) + l).try_inverse().unwrap();
    l * inv
}

/// `min_c |x_i - c|^2` for every point.
pub fn kmeans_losses(points: &PointSet, centers: &[Vec<f64>]) -> Vec<f64> {
    points
        .iter()
        .map(|x| {
            centers
                .iter()
                .map(|c| x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

pub fn mean_and_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
