use nalgebra::DMatrix;
use rand::Rng;

use super::esp::{elementary_polynomials, mdpp_eigen_inclusion};
use super::kernel::MarginalKernelView;
use crate::error::{DppcError, Result};
use crate::rff::numerically_nonzero;
use crate::rng::draw_index;

/// Sampled indices with their estimator weights and inclusion probabilities.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeightedSample {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    pub inclusion_probs: Vec<f64>,
}

impl WeightedSample {
    /// Weights `1 / pi_s`.
    pub fn from_inclusion(indices: Vec<usize>, inclusion_probs: Vec<f64>) -> Result<Self> {
        if let Some((&i, &p)) = indices
            .iter()
            .zip(&inclusion_probs)
            .find(|(_, p)| !(**p > 0.0))
        {
            return Err(DppcError::NumericalDegeneracy(format!(
                "sampled index {i} has inclusion probability {p}"
            )));
        }
        let inclusion_probs: Vec<f64> = inclusion_probs.into_iter().map(|p| p.min(1.0)).collect();
        let weights = inclusion_probs.iter().map(|p| 1.0 / p).collect();
        Ok(Self {
            indices,
            weights,
            inclusion_probs,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Independent Bernoulli selection of eigen indices with `P(k) = nu_k / (1 + nu_k)`.
pub fn dpp_eigen_select<R: Rng + ?Sized>(nu: &[f64], rng: &mut R) -> Vec<usize> {
    nu.iter()
        .enumerate()
        .filter_map(|(k, &v)| {
            let p = if v > 0.0 { v / (1.0 + v) } else { 0.0 };
            (rng.random::<f64>() < p).then_some(k)
        })
        .collect()
}

/// Exactly `m` eigen indices with `P(J) ∝ prod_{k in J} nu_k`.
///
/// Walks the variables backwards, including `k` with probability
/// `nu_k e_(l-1)(nu_1..nu_(k-1)) / e_l(nu_1..nu_k)` where `l` counts the
/// remaining slots.
pub fn mdpp_eigen_select<R: Rng + ?Sized>(
    nu: &[f64],
    m: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let available = numerically_nonzero(nu).len();
    if m > available {
        return Err(DppcError::RankDeficient {
            needed: m,
            available,
        });
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    let table = elementary_polynomials(nu, m)?;
    let mut selected = Vec::with_capacity(m);
    let mut remaining = m;
    for k in (1..=nu.len()).rev() {
        if remaining == 0 {
            break;
        }
        let take = if k == remaining {
            true
        } else {
            let log_p = nu[k - 1].ln() + table.prefix_log(k - 1, remaining - 1)
                - table.prefix_log(k, remaining);
            rng.random::<f64>() < log_p.exp()
        };
        if take {
            selected.push(k - 1);
            remaining -= 1;
        }
    }
    selected.reverse();
    Ok(selected)
}

/// Sequential sampler for the projection DPP with kernel `W W^T`.
///
/// `W` is `N x J` with orthonormal columns; exactly `J` distinct indices come
/// back, in draw order. Each step draws from the residual masses `p(i)`, builds
/// the next Gram-Schmidt direction `f_n` from the chosen row and removes its
/// contribution from every `p(i)`.
pub fn sample_projective<R: Rng + ?Sized>(w: &DMatrix<f64>, rng: &mut R) -> Result<Vec<usize>> {
    let n = w.nrows();
    let j = w.ncols();
    if j == 0 {
        return Ok(Vec::new());
    }
    if j > n {
        return Err(DppcError::param(format!(
            "projection rank {j} exceeds the number of points {n}"
        )));
    }
    // rows y_i, row-major for cache-friendly dot products
    let y: Vec<f64> = (0..n)
        .flat_map(|i| (0..j).map(move |c| (i, c)))
        .map(|(i, c)| w[(i, c)])
        .collect();
    let row = |i: usize| &y[i * j..(i + 1) * j];
    let mut p: Vec<f64> = (0..n).map(|i| row(i).iter().map(|v| v * v).sum()).collect();
    let trace: f64 = p.iter().sum();
    if (trace - j as f64).abs() > 1e-6 * j as f64 {
        log::debug!("projective sampler: input trace {trace} differs from rank {j}");
    }

    let mut f: Vec<Vec<f64>> = Vec::with_capacity(j);
    let mut sample = Vec::with_capacity(j);
    for step in 0..j {
        let s = draw_index(&p, rng).ok_or_else(|| {
            DppcError::NumericalDegeneracy(format!(
                "selection mass vanished after {step} of {j} draws"
            ))
        })?;
        sample.push(s);
        let ys = row(s);
        let mut fnew = ys.to_vec();
        for fl in &f {
            let proj: f64 = fl.iter().zip(ys).map(|(a, b)| a * b).sum();
            for (x, a) in fnew.iter_mut().zip(fl) {
                *x -= a * proj;
            }
        }
        let norm: f64 = fnew.iter().zip(ys).map(|(a, b)| a * b).sum();
        if !(norm > 0.0) {
            return Err(DppcError::NumericalDegeneracy(format!(
                "non-positive residual norm {norm} at draw {step}"
            )));
        }
        let inv = 1.0 / norm.sqrt();
        fnew.iter_mut().for_each(|x| *x *= inv);
        for (i, pi) in p.iter_mut().enumerate() {
            let dot: f64 = fnew.iter().zip(row(i)).map(|(a, b)| a * b).sum();
            *pi = (*pi - dot * dot).max(0.0);
        }
        p[s] = 0.0;
        f.push(fnew);
    }
    Ok(sample)
}

/// DPP inclusion probabilities `K_ii = sum_k nu_k/(1+nu_k) u_k(i)^2`.
pub fn dpp_marginals(view: &MarginalKernelView) -> Vec<f64> {
    view.weighted_diagonal(&view.marginal_eigenvalues())
}

/// m-DPP inclusion probabilities, `sum_k P(k in J) u_k(i)^2`, summing to `m`.
pub fn mdpp_marginals(view: &MarginalKernelView, m: usize) -> Result<Vec<f64>> {
    check_rank(view, m)?;
    let p = mdpp_eigen_inclusion(view.eigenvalues(), m)?;
    Ok(view.weighted_diagonal(&p))
}

fn check_rank(view: &MarginalKernelView, m: usize) -> Result<()> {
    if m > view.rank() {
        return Err(DppcError::RankDeficient {
            needed: m,
            available: view.rank(),
        });
    }
    Ok(())
}

/// `P(i in S and j in S) = pi_i pi_j - K_ij^2` for a DPP.
pub fn joint_pair_probability(view: &MarginalKernelView, i: usize, j: usize) -> Result<f64> {
    if i == j {
        return Err(DppcError::param("pair probability needs two distinct indices"));
    }
    if i >= view.len() || j >= view.len() {
        return Err(DppcError::param("index out of range"));
    }
    let c = view.marginal_eigenvalues();
    let pi = view.weighted_entry(&c, i, i);
    let pj = view.weighted_entry(&c, j, j);
    let kij = view.weighted_entry(&c, i, j);
    Ok(pi * pj - kij * kij)
}

pub fn sample_dpp<R: Rng + ?Sized>(
    view: &MarginalKernelView,
    rng: &mut R,
) -> Result<WeightedSample> {
    let selected = dpp_eigen_select(view.eigenvalues(), rng);
    let w = view.eigenvectors(&selected);
    let indices = sample_projective(&w, rng)?;
    let pi = view.weighted_diagonal_at(&view.marginal_eigenvalues(), &indices);
    WeightedSample::from_inclusion(indices, pi)
}

pub fn sample_mdpp<R: Rng + ?Sized>(
    view: &MarginalKernelView,
    m: usize,
    rng: &mut R,
) -> Result<WeightedSample> {
    check_rank(view, m)?;
    if m == 0 {
        return Ok(WeightedSample::default());
    }
    let selected = mdpp_eigen_select(view.eigenvalues(), m, rng)?;
    let w = view.eigenvectors(&selected);
    let indices = sample_projective(&w, rng)?;
    let p = mdpp_eigen_inclusion(view.eigenvalues(), m)?;
    let pi = view.weighted_diagonal_at(&p, &indices);
    WeightedSample::from_inclusion(indices, pi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn eigen_select_edges() {
        let mut rng = seeded(1);
        for _ in 0..100 {
            assert!(dpp_eigen_select(&[0.0, 0.0, 0.0], &mut rng).is_empty());
        }
        let hits = (0..10_000)
            .filter(|_| dpp_eigen_select(&[1e15], &mut rng) == vec![0])
            .count();
        assert!(hits as f64 / 1e4 > 0.999);
    }

    #[test]
    fn eigen_select_mean_size() {
        let mut rng = seeded(2);
        let draws = 100_000;
        let sizes: Vec<f64> = (0..draws)
            .map(|_| dpp_eigen_select(&[1.0, 1.0], &mut rng).len() as f64)
            .collect();
        let mean = sizes.iter().sum::<f64>() / draws as f64;
        // |J| ~ Binomial(2, 1/2): variance 1/2
        let se = (0.5f64 / draws as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn mdpp_select_full_and_symmetric() {
        let mut rng = seeded(3);
        assert_eq!(mdpp_eigen_select(&[0.5, 2.0, 7.0], 3, &mut rng).unwrap(), vec![0, 1, 2]);
        let draws = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            let j = mdpp_eigen_select(&[1.0, 1.0, 1.0], 1, &mut rng).unwrap();
            counts[j[0]] += 1;
        }
        let se = ((1.0 / 3.0) * (2.0 / 3.0) / draws as f64).sqrt();
        for c in counts {
            assert!((c as f64 / draws as f64 - 1.0 / 3.0).abs() < 3.0 * se);
        }
        let err = mdpp_eigen_select(&[1.0, 0.0], 2, &mut rng).unwrap_err();
        assert!(matches!(err, DppcError::RankDeficient { needed: 2, available: 1 }));
    }

    #[test]
    fn mdpp_select_matches_product_law() {
        let mut rng = seeded(4);
        let draws = 200_000;
        let mut counts = [0usize; 3]; // {0,1}, {0,2}, {1,2}
        for _ in 0..draws {
            match mdpp_eigen_select(&[1.0, 2.0, 4.0], 2, &mut rng).unwrap()[..] {
                [0, 1] => counts[0] += 1,
                [0, 2] => counts[1] += 1,
                [1, 2] => counts[2] += 1,
                ref other => panic!("unexpected {other:?}"),
            }
        }
        let target = [2.0 / 14.0, 4.0 / 14.0, 8.0 / 14.0];
        let tv: f64 = counts
            .iter()
            .zip(target)
            .map(|(&c, t)| (c as f64 / draws as f64 - t).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "tv {tv}");
    }

    #[test]
    fn projective_single_basis_vector() {
        let w = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let mut rng = seeded(5);
        for _ in 0..100 {
            assert_eq!(sample_projective(&w, &mut rng).unwrap(), vec![0]);
        }
    }

    #[test]
    fn projective_returns_distinct_indices() {
        let mut rng = seeded(6);
        let a = DMatrix::from_fn(12, 5, |_, _| rng.random::<f64>() - 0.5);
        let q = a.qr().q();
        for _ in 0..200 {
            let s = sample_projective(&q, &mut rng).unwrap();
            assert_eq!(s.len(), 5);
            let mut sorted = s.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), 5);
        }
    }

    #[test]
    fn pair_probability_rejects_same_index() {
        let v = MarginalKernelView::from_eigenpairs(DMatrix::identity(2, 2), &[1.0, 1.0]).unwrap();
        assert!(joint_pair_probability(&v, 1, 1).is_err());
        // diagonal K: independent inclusion
        let p = joint_pair_probability(&v, 0, 1).unwrap();
        assert!((p - 0.25).abs() < 1e-15);
    }

    #[test]
    fn uniform_eigenvector_marginals() {
        let n = 4;
        let u = DMatrix::from_element(n, 1, 1.0 / (n as f64).sqrt());
        let v = MarginalKernelView::from_eigenpairs(u, &[3.0]).unwrap();
        for p in dpp_marginals(&v) {
            assert!((p - 0.75 / n as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_kernel_gives_empty_sample() {
        let v = MarginalKernelView::from_eigenpairs(DMatrix::identity(3, 3), &[0.0; 3]).unwrap();
        let mut rng = seeded(7);
        assert!(sample_dpp(&v, &mut rng).unwrap().is_empty());
        assert!(sample_mdpp(&v, 0, &mut rng).unwrap().is_empty());
        assert!(sample_mdpp(&v, 1, &mut rng).is_err());
    }
}
