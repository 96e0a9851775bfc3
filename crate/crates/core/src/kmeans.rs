//! D² seeding, weighted Lloyd iterations and nearest-centroid labelling.

use rand::Rng;

use crate::coreset::KMeansParameter;
use crate::error::{DppcError, Result};
use crate::points::{sq_dist, PointSet};
use crate::rng::draw_index;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    pub centroids: KMeansParameter,
    pub labels: Vec<usize>,
    pub cost: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub enum LloydInit {
    Indices(Vec<usize>),
    Centroids(KMeansParameter),
}

#[derive(Debug, Clone, Copy)]
pub struct LloydOptions {
    pub max_iters: usize,
    /// Stop once the relative cost decrease falls below this.
    pub tol: f64,
}

impl Default for LloydOptions {
    fn default() -> Self {
        Self {
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

/// `m` distinct indices by D² sampling.
pub fn d2_seeding<R: Rng + ?Sized>(points: &PointSet, m: usize, rng: &mut R) -> Result<Vec<usize>> {
    d2_seeding_weighted(points, None, m, rng)
}

/// D² sampling where point `i` carries mass `w_i`: the first index is drawn
/// proportionally to `w`, later ones proportionally to `w_i d(x_i, S)^2`.
/// When every residual mass is zero the next index is uniform among the
/// unsampled points with positive weight.
pub fn d2_seeding_weighted<R: Rng + ?Sized>(
    points: &PointSet,
    weights: Option<&[f64]>,
    m: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let n = points.len();
    let w = match weights {
        Some(w) if w.len() != n => {
            return Err(DppcError::DimensionMismatch {
                expected: n,
                got: w.len(),
            })
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; n],
    };
    let eligible = w.iter().filter(|v| **v > 0.0).count();
    if m > eligible {
        return Err(DppcError::param(format!(
            "cannot seed {m} distinct points from {eligible} with positive weight"
        )));
    }
    let mut chosen = Vec::with_capacity(m);
    if m == 0 {
        return Ok(chosen);
    }
    let mut taken = vec![false; n];
    let mut dist = vec![f64::INFINITY; n];
    let mut mass = w.clone();
    for _ in 0..m {
        let next = match draw_index(&mass, rng) {
            Some(i) => i,
            None => {
                let free: Vec<usize> = (0..n).filter(|&i| !taken[i] && w[i] > 0.0).collect();
                free[rng.random_range(0..free.len())]
            }
        };
        chosen.push(next);
        taken[next] = true;
        let c = points.point(next);
        for i in 0..n {
            dist[i] = dist[i].min(sq_dist(points.point(i), c));
            mass[i] = if taken[i] { 0.0 } else { w[i] * dist[i] };
        }
    }
    Ok(chosen)
}

/// Nearest centroid per point, ties to the lowest centroid index.
pub fn assign_labels(points: &PointSet, theta: &KMeansParameter) -> Result<Vec<usize>> {
    if points.dim() != theta.dim() {
        return Err(DppcError::DimensionMismatch {
            expected: points.dim(),
            got: theta.dim(),
        });
    }
    Ok(points.iter().map(|x| theta.nearest(x).0).collect())
}

fn distinct_positive(points: &PointSet, w: &[f64]) -> usize {
    let mut rows: Vec<Vec<u64>> = points
        .iter()
        .zip(w)
        .filter(|(_, wi)| **wi > 0.0)
        .map(|(x, _)| x.iter().map(|v| (v + 0.0).to_bits()).collect())
        .collect();
    rows.sort_unstable();
    rows.dedup();
    rows.len()
}

/// Weighted Lloyd iterations from `init`.
pub fn weighted_lloyd(
    points: &PointSet,
    weights: Option<&[f64]>,
    k: usize,
    init: LloydInit,
    options: LloydOptions,
) -> Result<ClusteringResult> {
    let n = points.len();
    let d = points.dim();
    let w = match weights {
        Some(w) if w.len() != n => {
            return Err(DppcError::DimensionMismatch {
                expected: n,
                got: w.len(),
            })
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; n],
    };
    if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(DppcError::param("weights must be finite and nonnegative"));
    }
    if !w.iter().any(|v| *v > 0.0) {
        return Err(DppcError::param("all weights are zero"));
    }
    if k == 0 {
        return Err(DppcError::param("k must be at least 1"));
    }
    let available = distinct_positive(points, &w);
    if k > available {
        return Err(DppcError::param(format!(
            "k = {k} exceeds the {available} distinct points with positive weight"
        )));
    }
    let mut centroids = match init {
        LloydInit::Indices(idx) => KMeansParameter::from_points(points, &idx)?,
        LloydInit::Centroids(c) => c,
    };
    if centroids.k() != k || centroids.dim() != d {
        return Err(DppcError::DimensionMismatch {
            expected: k * d,
            got: centroids.k() * centroids.dim(),
        });
    }

    let assign = |c: &KMeansParameter| -> (Vec<usize>, Vec<f64>, f64) {
        let mut labels = Vec::with_capacity(n);
        let mut dists = Vec::with_capacity(n);
        let mut cost = 0.0;
        for (x, wi) in points.iter().zip(&w) {
            let (j, dist) = c.nearest(x);
            labels.push(j);
            dists.push(dist);
            cost += wi * dist;
        }
        (labels, dists, cost)
    };

    let (mut labels, mut dists, mut cost) = assign(&centroids);
    let mut iterations = 0;
    while iterations < options.max_iters {
        iterations += 1;
        let mut sums = vec![0.0; k * d];
        let mut mass = vec![0.0; k];
        for (i, x) in points.iter().enumerate() {
            let j = labels[i];
            mass[j] += w[i];
            for (s, v) in sums[j * d..(j + 1) * d].iter_mut().zip(x) {
                *s += w[i] * v;
            }
        }
        let mut used = vec![false; n];
        for j in 0..k {
            if mass[j] > 0.0 {
                sums[j * d..(j + 1) * d].iter_mut().for_each(|s| *s /= mass[j]);
            } else {
                // empty cluster: move to the point contributing most to the cost
                let far = (0..n)
                    .filter(|&i| !used[i])
                    .max_by(|&a, &b| (w[a] * dists[a]).total_cmp(&(w[b] * dists[b])).then(b.cmp(&a)))
                    .expect("k <= n");
                used[far] = true;
                dists[far] = 0.0;
                sums[j * d..(j + 1) * d].copy_from_slice(points.point(far));
            }
        }
        let next = KMeansParameter::new(sums, k, d)?;
        let (new_labels, new_dists, new_cost) = assign(&next);
        assert!(
            new_cost <= cost * (1.0 + 1e-12) + f64::MIN_POSITIVE,
            "Lloyd cost increased from {cost} to {new_cost}"
        );
        let decrease = cost - new_cost;
        centroids = next;
        labels = new_labels;
        dists = new_dists;
        let done = cost == 0.0 || decrease <= options.tol * cost;
        cost = new_cost;
        if done {
            break;
        }
    }
    Ok(ClusteringResult {
        centroids,
        labels,
        cost,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn line(xs: &[f64]) -> PointSet {
        PointSet::new(xs.to_vec(), xs.len(), 1).unwrap()
    }

    #[test]
    fn seeding_edges() {
        let mut rng = seeded(1);
        assert_eq!(d2_seeding(&line(&[3.0]), 1, &mut rng).unwrap(), vec![0]);
        let same = line(&[2.0, 2.0, 2.0]);
        let s = d2_seeding(&same, 2, &mut rng).unwrap();
        assert_ne!(s[0], s[1]);
        assert!(d2_seeding(&same, 4, &mut rng).is_err());
        let x = line(&[0.0, 0.0, 100.0]);
        for _ in 0..200 {
            let s = d2_seeding(&x, 2, &mut rng).unwrap();
            if s[0] != 2 {
                assert_eq!(s[1], 2);
            }
        }
    }

    #[test]
    fn seeding_full_is_permutation() {
        let mut rng = seeded(2);
        let x = line(&[0.0, 1.0, 4.0, 9.0, 16.0]);
        let mut s = d2_seeding(&x, 5, &mut rng).unwrap();
        s.sort();
        assert_eq!(s, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn weighted_seeding_skips_zero_weight() {
        let mut rng = seeded(3);
        let x = line(&[0.0, 5.0, 9.0]);
        for _ in 0..100 {
            let s = d2_seeding_weighted(&x, Some(&[1.0, 0.0, 1.0]), 2, &mut rng).unwrap();
            assert!(!s.contains(&1));
        }
    }

    #[test]
    fn labels_and_ties() {
        let x = line(&[0.0, 9.0]);
        let theta = KMeansParameter::new(vec![1.0, 8.0], 2, 1).unwrap();
        assert_eq!(assign_labels(&x, &theta).unwrap(), vec![0, 1]);
        let tie = KMeansParameter::new(vec![-1.0, 1.0, 0.0], 3, 1).unwrap();
        assert_eq!(assign_labels(&line(&[0.0]), &tie).unwrap(), vec![2]);
        let both = KMeansParameter::new(vec![-1.0, 1.0], 2, 1).unwrap();
        assert_eq!(assign_labels(&line(&[0.0]), &both).unwrap(), vec![0]);
    }

    #[test]
    fn lloyd_examples() {
        let x = line(&[0.0, 1.0, 10.0, 11.0]);
        let r = weighted_lloyd(&x, None, 2, LloydInit::Indices(vec![0, 2]), LloydOptions::default())
            .unwrap();
        let mut c = r.centroids.as_slice().to_vec();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, vec![0.5, 10.5]);
        assert_eq!(r.cost, 1.0);

        let fixed = KMeansParameter::new(vec![0.5, 10.5], 2, 1).unwrap();
        let again = weighted_lloyd(&x, None, 2, LloydInit::Centroids(fixed.clone()), LloydOptions::default())
            .unwrap();
        assert_eq!(again.iterations, 1);
        assert_eq!(again.centroids, fixed);

        let one = weighted_lloyd(&x, None, 1, LloydInit::Indices(vec![3]), LloydOptions::default()).unwrap();
        assert_eq!(one.centroids.as_slice(), &[5.5]);
    }

    #[test]
    fn lloyd_respects_weights_and_rejects_bad_k() {
        let x = line(&[0.0, 10.0]);
        let r = weighted_lloyd(&x, Some(&[3.0, 1.0]), 1, LloydInit::Indices(vec![0]), LloydOptions::default())
            .unwrap();
        assert!((r.centroids.as_slice()[0] - 2.5).abs() < 1e-12);
        let dup = line(&[1.0, 1.0, 1.0]);
        assert!(weighted_lloyd(&dup, None, 2, LloydInit::Indices(vec![0, 1]), LloydOptions::default()).is_err());
        assert!(weighted_lloyd(&x, Some(&[0.0, 0.0]), 1, LloydInit::Indices(vec![0]), LloydOptions::default()).is_err());
    }

    #[test]
    fn empty_cluster_is_repaired() {
        let x = line(&[0.0, 1.0, 10.0, 11.0]);
        // second centroid far away attracts nothing
        let init = KMeansParameter::new(vec![5.0, 1000.0], 2, 1).unwrap();
        let r = weighted_lloyd(&x, None, 2, LloydInit::Centroids(init), LloydOptions::default()).unwrap();
        assert!(r.cost < 2.0 + 1e-12);
        assert_eq!(assign_labels(&x, &r.centroids).unwrap(), r.labels);
    }
}
