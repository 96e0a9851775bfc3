//! Sensitivities of the k-means cost and the outlier split.

use rand::Rng;

use crate::error::{DppcError, Result};
use crate::kmeans::d2_seeding;
use crate::points::{sq_dist, PointSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SensitivityKind {
    Exact1Means,
    UpperBound,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityProfile {
    pub sigma: Vec<f64>,
    pub total: f64,
    pub kind: SensitivityKind,
}

impl SensitivityProfile {
    pub fn new(sigma: Vec<f64>, kind: SensitivityKind) -> Result<Self> {
        if sigma.is_empty() {
            return Err(DppcError::param("empty sensitivity profile"));
        }
        if let Some(s) = sigma.iter().find(|s| !(**s > 0.0 && **s <= 1.0)) {
            return Err(DppcError::param(format!("sensitivity {s} outside (0, 1]")));
        }
        let total = sigma.iter().sum();
        Ok(Self { sigma, total, kind })
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.sigma.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.sigma.iter().cloned().fold(0.0, f64::max)
    }

    /// Sampling distribution `sigma_i / total`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.sigma.iter().map(|s| s / self.total).collect()
    }
}

/// Closed-form 1-means sensitivity `(1 + |x_i - mean|^2 / v) / N` with
/// `v` the mean squared distance to the mean.
pub fn one_means_sensitivity(points: &PointSet) -> Result<SensitivityProfile> {
    let n = points.len();
    if n < 2 {
        return Err(DppcError::DegenerateData("1-means sensitivity needs at least two points".into()));
    }
    let mean = points.mean();
    let sq: Vec<f64> = points.iter().map(|x| sq_dist(x, &mean)).collect();
    let v = sq.iter().sum::<f64>() / n as f64;
    if !(v > 0.0) {
        return Err(DppcError::DegenerateData("all points coincide".into()));
    }
    let nf = n as f64;
    let sigma: Vec<f64> = sq.iter().map(|s| ((1.0 + s / v) / nf).min(1.0)).collect();
    SensitivityProfile::new(sigma, SensitivityKind::Exact1Means)
}

/// Sensitivity upper bounds from a D²-seeded bicriteria solution.
///
/// With `B` the `k` seeded centers, `B_i` the cluster of `x_i`,
/// `c = mean_x d(x, B)^2` and `a = 16 (ln k + 2)`:
/// `s_i = a d(x_i, B)^2 / c + 2 a sum_{B_i} d(x, B)^2 / (|B_i| c) + 4 N / |B_i|`.
/// Returns the bounds `s_i / N` (clamped to 1) and the sampling
/// probabilities `s_i / sum s`.
pub fn bicriteria_sensitivity_bound<R: Rng + ?Sized>(
    points: &PointSet,
    k: usize,
    rng: &mut R,
) -> Result<(SensitivityProfile, Vec<f64>)> {
    let n = points.len();
    if k == 0 || n <= k {
        return Err(DppcError::param(format!("need 1 <= k < N, got k = {k}, N = {n}")));
    }
    let centers = d2_seeding(points, k, rng)?;
    let mut cluster = vec![0usize; n];
    let mut dist = vec![0.0; n];
    for (i, x) in points.iter().enumerate() {
        let (j, d) = centers
            .iter()
            .enumerate()
            .map(|(j, &c)| (j, sq_dist(x, points.point(c))))
            .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b });
        cluster[i] = j;
        dist[i] = d;
    }
    let c_phi = dist.iter().sum::<f64>() / n as f64;
    if !(c_phi > 0.0) {
        return Err(DppcError::DegenerateData(
            "bicriteria solution has zero cost; the data has at most k distinct points".into(),
        ));
    }
    let mut size = vec![0usize; k];
    let mut cost = vec![0.0; k];
    for i in 0..n {
        size[cluster[i]] += 1;
        cost[cluster[i]] += dist[i];
    }
    let alpha = 16.0 * ((k as f64).ln() + 2.0);
    let nf = n as f64;
    let s: Vec<f64> = (0..n)
        .map(|i| {
            let j = cluster[i];
            let b = size[j] as f64;
            alpha * dist[i] / c_phi + 2.0 * alpha * cost[j] / (b * c_phi) + 4.0 * nf / b
        })
        .collect();
    let total: f64 = s.iter().sum();
    let probs = s.iter().map(|v| v / total).collect();
    let sigma = s.iter().map(|v| (v / nf).min(1.0)).collect();
    Ok((SensitivityProfile::new(sigma, SensitivityKind::UpperBound)?, probs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierSplit {
    pub outlier_indices: Vec<usize>,
    pub kept_indices: Vec<usize>,
    pub threshold: f64,
}

/// Points with `sigma_i > threshold` are outliers.
pub fn split_outliers(profile: &SensitivityProfile, threshold: f64) -> Result<OutlierSplit> {
    let n = profile.len() as f64;
    if !(threshold >= 1.0 / n - 1e-15 && threshold <= 1.0) {
        return Err(DppcError::param(format!(
            "threshold {threshold} outside [1/N, 1]"
        )));
    }
    let (outlier_indices, kept_indices) =
        (0..profile.len()).partition(|&i| profile.sigma[i] > threshold);
    Ok(OutlierSplit {
        outlier_indices,
        kept_indices,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, d: usize, seed: u64) -> PointSet {
        let mut rng = seeded(seed);
        let data = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
        PointSet::new(data, n, d).unwrap()
    }

    #[test]
    fn symmetric_pair() {
        let x = PointSet::new(vec![-1.0, 1.0], 2, 1).unwrap();
        let p = one_means_sensitivity(&x).unwrap();
        assert_eq!(p.sigma, vec![1.0, 1.0]);
        assert_eq!(p.total, 2.0);
        assert!(one_means_sensitivity(&PointSet::new(vec![3.0, 3.0], 2, 1).unwrap()).is_err());
    }

    #[test]
    fn total_is_two() {
        for seed in 0..10 {
            let p = one_means_sensitivity(&gaussian(50 + seed as usize, 3, seed)).unwrap();
            assert!((p.total - 2.0).abs() < 1e-12);
            assert!(p.len() as f64 * p.min() >= 1.0);
        }
    }

    #[test]
    fn bicriteria_is_distribution_and_dominates_for_one_cluster() {
        let x = gaussian(200, 2, 1);
        let exact = one_means_sensitivity(&x).unwrap();
        let mut dominated = 0;
        let mut total = 0;
        for seed in 0..20 {
            let (bound, p) = bicriteria_sensitivity_bound(&x, 1, &mut seeded(seed)).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|v| *v > 0.0));
            assert_eq!(bound.kind, SensitivityKind::UpperBound);
            dominated += bound.sigma.iter().zip(&exact.sigma).filter(|(b, e)| b >= e).count();
            total += x.len();
        }
        assert!(dominated as f64 >= 0.95 * total as f64);
    }

    #[test]
    fn bicriteria_shrinks_when_data_is_duplicated() {
        let x = gaussian(100, 2, 2);
        let rows: Vec<Vec<f64>> = x.iter().chain(x.iter()).map(|r| r.to_vec()).collect();
        let doubled = PointSet::from_rows(&rows).unwrap();
        let (a, _) = bicriteria_sensitivity_bound(&x, 1, &mut seeded(3)).unwrap();
        let (b, _) = bicriteria_sensitivity_bound(&doubled, 1, &mut seeded(3)).unwrap();
        // the seeded center has d = 0, so its bound is (2a + 4) / N
        assert!((b.min() - a.min() / 2.0).abs() < 1e-12);
        assert!(b.max() <= a.max());
    }

    #[test]
    fn split_examples() {
        let mut sigma = vec![0.01; 10];
        sigma[3] = 0.9;
        let p = SensitivityProfile::new(sigma, SensitivityKind::UpperBound).unwrap();
        let s = split_outliers(&p, 0.5).unwrap();
        assert_eq!(s.outlier_indices, vec![3]);
        assert_eq!(s.kept_indices.len(), 9);
        assert!(split_outliers(&p, 1.0).unwrap().outlier_indices.is_empty());
        let all = split_outliers(&p, 0.1).unwrap();
        assert_eq!(all.outlier_indices, vec![3]);
        assert!(split_outliers(&p, 0.01).is_err());
        assert!(split_outliers(&p, 1.5).is_err());
    }

    proptest! {
        #[test]
        fn translation_invariant(
            shift in prop::collection::vec(-50.0f64..50.0, 2),
            seed in 0u64..1000,
        ) {
            let x = gaussian(30, 2, seed);
            let a = one_means_sensitivity(&x).unwrap();
            let b = one_means_sensitivity(&x.translated(&shift).unwrap()).unwrap();
            for (u, v) in a.sigma.iter().zip(&b.sigma) {
                prop_assert!((u - v).abs() <= 1e-9 * u);
            }
        }
    }
}
