//! Cost model, cost estimators and the empirical coreset test.

use rayon::prelude::*;

use crate::dpp::{MarginalKernelView, WeightedSample};
use crate::error::{DppcError, Result};
use crate::points::{sq_dist, PointSet};
use crate::rng::{derive_seed, stream_rng, DppcRng};
use rand::Rng;

/// Salt of the stream that draws evaluation parameters, shared by every method.
pub const THETA_SALT: u64 = 0x74_68_65_74_61;

/// Per-point loss `f(x, theta)` and its total over a set.
pub trait CostModel: Sync {
    type Param: Sync;

    fn evaluate(&self, x: &[f64], theta: &Self::Param) -> f64;

    fn exact_total(&self, points: &PointSet, theta: &Self::Param) -> f64 {
        points.iter().map(|x| self.evaluate(x, theta)).sum()
    }
}

/// `f(x, theta) = min_c |x - c|^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct KMeansCost;

impl CostModel for KMeansCost {
    type Param = KMeansParameter;

    fn evaluate(&self, x: &[f64], theta: &KMeansParameter) -> f64 {
        theta.nearest(x).1
    }
}

/// `k` centroids in `d` dimensions, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct KMeansParameter {
    k: usize,
    d: usize,
    data: Vec<f64>,
}

impl KMeansParameter {
    pub fn new(data: Vec<f64>, k: usize, d: usize) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(DppcError::param("need at least one centroid in at least one dimension"));
        }
        if data.len() != k * d {
            return Err(DppcError::DimensionMismatch {
                expected: k * d,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(DppcError::param("centroids must be finite"));
        }
        Ok(Self { k, d, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(DppcError::param("ragged centroid rows"));
        }
        Self::new(rows.concat(), rows.len(), d)
    }

    /// Centroids at the given data points.
    pub fn from_points(points: &PointSet, indices: &[usize]) -> Result<Self> {
        let data = indices.iter().flat_map(|&i| points.point(i).to_vec()).collect();
        Self::new(data, indices.len(), points.dim())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn centroid(&self, j: usize) -> &[f64] {
        &self.data[j * self.d..(j + 1) * self.d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Nearest centroid and its squared distance; ties go to the lowest index.
    pub fn nearest(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (j, c) in self.data.chunks_exact(self.d).enumerate() {
            let dist = sq_dist(x, c);
            if dist < best.1 {
                best = (j, dist);
            }
        }
        best
    }

    fn check_dim(&self, points: &PointSet) -> Result<()> {
        if points.dim() != self.d {
            return Err(DppcError::DimensionMismatch {
                expected: points.dim(),
                got: self.d,
            });
        }
        Ok(())
    }

    /// Each centroid uniform in the bounding box of `points`.
    pub fn random_in_box<R: Rng + ?Sized>(points: &PointSet, k: usize, rng: &mut R) -> Result<Self> {
        let bbox = points.bounding_box();
        let data = (0..k)
            .flat_map(|_| bbox.iter().map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>()).collect::<Vec<_>>())
            .collect();
        Self::new(data, k, points.dim())
    }
}

/// `sum_i w_i min_c |x_i - c|^2`.
pub fn kmeans_cost(points: &PointSet, weights: Option<&[f64]>, theta: &KMeansParameter) -> Result<f64> {
    theta.check_dim(points)?;
    match weights {
        None => Ok(KMeansCost.exact_total(points, theta)),
        Some(w) => {
            if w.len() != points.len() {
                return Err(DppcError::DimensionMismatch {
                    expected: points.len(),
                    got: w.len(),
                });
            }
            Ok(points.iter().zip(w).map(|(x, wi)| wi * theta.nearest(x).1).sum())
        }
    }
}

/// Iid importance-sampling estimate `sum_i f_i counts_i / (m p_i)`.
pub fn estimate_iid<C: CostModel>(
    points: &PointSet,
    theta: &C::Param,
    cost: &C,
    counts: &[usize],
    p: &[f64],
    m: usize,
) -> Result<f64> {
    if counts.len() != points.len() || p.len() != points.len() {
        return Err(DppcError::DimensionMismatch {
            expected: points.len(),
            got: counts.len().min(p.len()),
        });
    }
    if counts.iter().sum::<usize>() != m {
        return Err(DppcError::param("draw counts must sum to m"));
    }
    let mut total = 0.0;
    for (i, (&c, &pi)) in counts.iter().zip(p).enumerate() {
        if c == 0 {
            continue;
        }
        if !(pi > 0.0) {
            return Err(DppcError::param(format!(
                "index {i} drawn {c} times with probability {pi}"
            )));
        }
        total += cost.evaluate(points.point(i), theta) * c as f64 / (m as f64 * pi);
    }
    Ok(total)
}

/// Correlated estimate `sum_{s in S} f_s / pi_s`.
pub fn estimate_correlated<C: CostModel>(
    points: &PointSet,
    theta: &C::Param,
    cost: &C,
    sample: &WeightedSample,
) -> Result<f64> {
    let mut total = 0.0;
    for (&s, &pi) in sample.indices.iter().zip(&sample.inclusion_probs) {
        if !(pi > 0.0) {
            return Err(DppcError::param(format!("index {s} has inclusion probability {pi}")));
        }
        total += cost.evaluate(points.point(s), theta) / pi;
    }
    Ok(total)
}

/// Size of each sample's Voronoi cell; ties go to the earliest sample.
pub fn voronoi_weights(points: &PointSet, sample: &[usize]) -> Result<Vec<usize>> {
    if sample.is_empty() {
        return Err(DppcError::param("Voronoi weights need a non-empty sample"));
    }
    let centers = KMeansParameter::from_points(points, sample)?;
    let mut w = vec![0usize; sample.len()];
    for x in points.iter() {
        w[centers.nearest(x).0] += 1;
    }
    Ok(w)
}

/// Indices with fixed estimator weights: `L_hat = sum_s w_s f(x_s)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedSubset {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl WeightedSubset {
    pub fn full(n: usize) -> Self {
        Self {
            indices: (0..n).collect(),
            weights: vec![1.0; n],
        }
    }

    pub fn estimate<C: CostModel>(&self, points: &PointSet, theta: &C::Param, cost: &C) -> f64 {
        self.indices
            .iter()
            .zip(&self.weights)
            .map(|(&i, w)| w * cost.evaluate(points.point(i), theta))
            .sum()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    Importance,
    Voronoi,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Importance => "importance",
            EstimatorKind::Voronoi => "voronoi",
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = DppcError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "importance" => Ok(EstimatorKind::Importance),
            "voronoi" => Ok(EstimatorKind::Voronoi),
            other => Err(DppcError::Config(format!("unknown estimator '{other}'"))),
        }
    }
}

/// Raw output of a sampling method before an estimator is attached.
#[derive(Debug, Clone)]
pub enum MethodSample {
    /// Point-process sample with inclusion probabilities.
    Correlated(WeightedSample),
    /// `m` iid draws; `probs[i]` is the per-draw probability of `distinct[i]`.
    Iid {
        distinct: Vec<usize>,
        counts: Vec<usize>,
        probs: Vec<f64>,
        draws: usize,
    },
    /// Distinct indices without known inclusion probabilities.
    Unweighted(Vec<usize>),
}

impl MethodSample {
    /// Distinct sampled indices.
    pub fn indices(&self) -> &[usize] {
        match self {
            MethodSample::Correlated(s) => &s.indices,
            MethodSample::Iid { distinct, .. } => distinct,
            MethodSample::Unweighted(i) => i,
        }
    }

    /// Collapses `m` iid draws over `n` points into distinct indices and counts.
    pub fn from_draws(draws: &[usize], p: &[f64]) -> Self {
        let mut sorted = draws.to_vec();
        sorted.sort_unstable();
        let mut distinct = Vec::new();
        let mut counts = Vec::new();
        for i in sorted {
            if distinct.last() == Some(&i) {
                *counts.last_mut().unwrap() += 1;
            } else {
                distinct.push(i);
                counts.push(1);
            }
        }
        let probs = distinct.iter().map(|&i| p[i]).collect();
        MethodSample::Iid {
            distinct,
            counts,
            probs,
            draws: draws.len(),
        }
    }

    pub fn weighted(&self, points: &PointSet, kind: EstimatorKind) -> Result<WeightedSubset> {
        match kind {
            EstimatorKind::Voronoi => {
                let indices = self.indices().to_vec();
                if indices.is_empty() {
                    return Ok(WeightedSubset::default());
                }
                let weights = voronoi_weights(points, &indices)?
                    .into_iter()
                    .map(|w| w as f64)
                    .collect();
                Ok(WeightedSubset { indices, weights })
            }
            EstimatorKind::Importance => match self {
                MethodSample::Correlated(s) => Ok(WeightedSubset {
                    indices: s.indices.clone(),
                    weights: s.weights.clone(),
                }),
                MethodSample::Iid {
                    distinct,
                    counts,
                    probs,
                    draws,
                } => Ok(WeightedSubset {
                    indices: distinct.clone(),
                    weights: counts
                        .iter()
                        .zip(probs)
                        .map(|(&c, &p)| c as f64 / (*draws as f64 * p))
                        .collect(),
                }),
                MethodSample::Unweighted(_) => Err(DppcError::Config(
                    "importance weights need known inclusion probabilities; use the voronoi estimator"
                        .into(),
                )),
            },
        }
    }
}

/// Settings of the empirical coreset test.
#[derive(Debug, Clone)]
pub struct SuccessProtocol {
    pub epsilon: f64,
    pub theta_draws: usize,
    pub trials: usize,
    pub k: usize,
    pub seed: u64,
}

/// Fraction of `(trial, theta)` pairs with `|L_hat / L - 1| <= epsilon`.
///
/// Trial `t` samples with `stream_rng(seed, t)` and draws its parameters from
/// `stream_rng(derive_seed(seed, THETA_SALT), t)`, so every method sees the same
/// parameters for the same seed.
pub fn coreset_success_probability<F>(
    points: &PointSet,
    sampler: F,
    protocol: &SuccessProtocol,
) -> Result<f64>
where
    F: Fn(usize, &mut DppcRng) -> Result<WeightedSubset> + Sync,
{
    if protocol.theta_draws == 0 || protocol.trials == 0 || protocol.k == 0 {
        return Err(DppcError::param("trials, parameter draws and k must be positive"));
    }
    if !(protocol.epsilon > 0.0) {
        return Err(DppcError::param("epsilon must be positive"));
    }
    let hits = (0..protocol.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(protocol.seed, t as u64);
            let subset = sampler(t, &mut rng)?;
            coreset_hits(points, &subset, protocol, t)
        })
        .collect::<Result<Vec<_>>>()?;
    let total: usize = hits.iter().sum();
    Ok(total as f64 / (protocol.trials * protocol.theta_draws) as f64)
}

/// Number of the `theta_draws` parameters of trial `trial` for which `subset`
/// satisfies `|L_hat / L - 1| <= epsilon`.
pub fn coreset_hits(
    points: &PointSet,
    subset: &WeightedSubset,
    protocol: &SuccessProtocol,
    trial: usize,
) -> Result<usize> {
    let mut theta_rng = stream_rng(derive_seed(protocol.seed, THETA_SALT), trial as u64);
    let mut hits = 0;
    for _ in 0..protocol.theta_draws {
        let theta = KMeansParameter::random_in_box(points, protocol.k, &mut theta_rng)?;
        let exact = KMeansCost.exact_total(points, &theta);
        if !(exact > 0.0) {
            return Err(DppcError::NumericalDegeneracy(
                "full cost vanished for a drawn parameter".into(),
            ));
        }
        let est = subset.estimate(points, &theta, &KMeansCost);
        if (est / exact - 1.0).abs() <= protocol.epsilon {
            hits += 1;
        }
    }
    Ok(hits)
}

/// Terms of `Var(L_hat) = var_iid - correction` for the correlated estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceTerms {
    pub var_dpp: f64,
    pub var_iid: f64,
    pub correction: f64,
}

/// Variance of the correlated estimator under the DPP of `view`.
///
/// `var_iid = sum_i f_i^2 (1 - pi_i) / pi_i` is the variance of independent
/// Bernoulli sampling with the same marginals and
/// `correction = sum_{i != j} K_ij^2 f_i f_j / (pi_i pi_j)`.
pub fn variance_decomposition(view: &MarginalKernelView, f: &[f64]) -> Result<VarianceTerms> {
    let n = view.len();
    if f.len() != n {
        return Err(DppcError::DimensionMismatch {
            expected: n,
            got: f.len(),
        });
    }
    let k = view.marginal_kernel();
    let mut var_iid = 0.0;
    for i in 0..n {
        if f[i] == 0.0 {
            continue;
        }
        let pi = k[(i, i)];
        if !(pi > 0.0) {
            return Err(DppcError::param(format!(
                "point {i} has positive cost but inclusion probability {pi}"
            )));
        }
        var_iid += f[i] * f[i] * (1.0 - pi) / pi;
    }
    let mut correction = 0.0;
    for i in 0..n {
        if f[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            if j == i || f[j] == 0.0 {
                continue;
            }
            let kij = k[(i, j)];
            correction += kij * kij * f[i] * f[j] / (k[(i, i)] * k[(j, j)]);
        }
    }
    Ok(VarianceTerms {
        var_dpp: var_iid - correction,
        var_iid,
        correction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpp::brute_force_dpp;
    use crate::rng::seeded;
    use nalgebra::DMatrix;

    fn line(xs: &[f64]) -> PointSet {
        PointSet::new(xs.to_vec(), xs.len(), 1).unwrap()
    }

    #[test]
    fn kmeans_cost_examples() {
        let x = line(&[0.0, 1.0, 5.0]);
        let theta = KMeansParameter::new(vec![0.0, 5.0], 2, 1).unwrap();
        assert_eq!(kmeans_cost(&x, None, &theta).unwrap(), 1.0);
        let all = KMeansParameter::new(vec![0.0, 1.0, 5.0], 3, 1).unwrap();
        assert_eq!(kmeans_cost(&x, None, &all).unwrap(), 0.0);
        let mean = KMeansParameter::new(vec![2.0], 1, 1).unwrap();
        // N * population variance: 4 + 1 + 9
        assert!((kmeans_cost(&x, None, &mean).unwrap() - 14.0).abs() < 1e-12);
        let w = [2.0, 0.0, 1.0];
        assert_eq!(kmeans_cost(&x, Some(&w), &theta).unwrap(), 0.0);
        let wrong = KMeansParameter::new(vec![0.0, 0.0], 1, 2).unwrap();
        assert!(kmeans_cost(&x, None, &wrong).is_err());
    }

    #[test]
    fn iid_estimator_edges() {
        let x = line(&[0.0, 1.0, 5.0]);
        let theta = KMeansParameter::new(vec![0.0], 1, 1).unwrap();
        let f = estimate_iid(&x, &theta, &KMeansCost, &[0, 0, 1], &[0.0, 0.0, 1.0], 1).unwrap();
        assert_eq!(f, 25.0);
        let third = [1.0 / 3.0; 3];
        let l = estimate_iid(&x, &theta, &KMeansCost, &[1, 1, 1], &third, 3).unwrap();
        assert!((l - 26.0).abs() < 1e-12);
        assert!(estimate_iid(&x, &theta, &KMeansCost, &[1, 0, 0], &[0.0, 0.5, 0.5], 1).is_err());
        assert!(estimate_iid(&x, &theta, &KMeansCost, &[1, 0, 0], &third, 2).is_err());
    }

    #[test]
    fn correlated_estimator_edges() {
        let x = line(&[0.0, 1.0, 5.0]);
        let theta = KMeansParameter::new(vec![0.0], 1, 1).unwrap();
        let full = WeightedSample::from_inclusion(vec![0, 1, 2], vec![1.0; 3]).unwrap();
        assert_eq!(estimate_correlated(&x, &theta, &KMeansCost, &full).unwrap(), 26.0);
        let empty = WeightedSample::default();
        assert_eq!(estimate_correlated(&x, &theta, &KMeansCost, &empty).unwrap(), 0.0);
    }

    #[test]
    fn voronoi_examples() {
        let x = line(&[0.0, 1.0, 10.0]);
        assert_eq!(voronoi_weights(&x, &[0, 2]).unwrap(), vec![2, 1]);
        assert_eq!(voronoi_weights(&x, &[1]).unwrap(), vec![3]);
        assert_eq!(voronoi_weights(&x, &[0, 1, 2]).unwrap(), vec![1, 1, 1]);
        assert!(voronoi_weights(&x, &[]).is_err());
        // tie at 0.5 between samples 0 and 1 goes to the first listed
        let y = line(&[0.0, 0.5, 1.0]);
        assert_eq!(voronoi_weights(&y, &[2, 0]).unwrap(), vec![2, 1]);
    }

    #[test]
    fn success_probability_edges() {
        let mut rng = seeded(1);
        let data: Vec<f64> = (0..40).map(|_| rng.random::<f64>()).collect();
        let x = PointSet::new(data, 20, 2).unwrap();
        let protocol = SuccessProtocol {
            epsilon: 0.1,
            theta_draws: 5,
            trials: 4,
            k: 2,
            seed: 9,
        };
        let full = coreset_success_probability(&x, |_, _| Ok(WeightedSubset::full(20)), &protocol);
        assert_eq!(full.unwrap(), 1.0);
        let empty = coreset_success_probability(&x, |_, _| Ok(WeightedSubset::default()), &protocol);
        assert_eq!(empty.unwrap(), 0.0);
    }

    #[test]
    fn d2_style_samples_reject_importance_weights() {
        let x = line(&[0.0, 1.0, 10.0]);
        let s = MethodSample::Unweighted(vec![0, 2]);
        assert!(matches!(
            s.weighted(&x, EstimatorKind::Importance),
            Err(DppcError::Config(_))
        ));
        let w = s.weighted(&x, EstimatorKind::Voronoi).unwrap();
        assert_eq!(w.weights, vec![2.0, 1.0]);
    }

    #[test]
    fn iid_draws_collapse_to_counts() {
        let p = [0.5, 0.25, 0.25];
        let s = MethodSample::from_draws(&[2, 0, 2, 2], &p);
        let w = s.weighted(&line(&[0.0, 1.0, 2.0]), EstimatorKind::Importance).unwrap();
        assert_eq!(w.indices, vec![0, 2]);
        assert_eq!(w.weights, vec![1.0 / (4.0 * 0.5), 3.0 / (4.0 * 0.25)]);
    }

    #[test]
    fn variance_two_point_kernel() {
        let l = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 2.0]);
        let view = MarginalKernelView::from_l_ensemble(&l).unwrap();
        let law = brute_force_dpp(&l).unwrap();
        let k = view.marginal_kernel();
        let f = [1.5, 0.7];
        let pi = [k[(0, 0)], k[(1, 1)]];
        let total = f[0] + f[1];
        let brute = law.expectation(|s| {
            let est: f64 = s.iter().map(|&i| f[i] / pi[i]).sum();
            (est - total).powi(2)
        });
        let v = variance_decomposition(&view, &f).unwrap();
        assert!((v.var_dpp - brute).abs() < 1e-12, "{} vs {brute}", v.var_dpp);
        assert!(v.correction > 0.0);

        let zero = variance_decomposition(&view, &[0.0, 0.0]).unwrap();
        assert_eq!((zero.var_dpp, zero.var_iid, zero.correction), (0.0, 0.0, 0.0));

        let diag = MarginalKernelView::from_l_ensemble(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]))
            .unwrap();
        let d = variance_decomposition(&diag, &f).unwrap();
        assert_eq!(d.correction, 0.0);
        assert_eq!(d.var_dpp, d.var_iid);
    }
}
