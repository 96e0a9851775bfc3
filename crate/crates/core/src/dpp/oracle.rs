//! Exhaustive subset laws for small ground sets, used to validate the samplers.

use nalgebra::DMatrix;

use crate::error::{DppcError, Result};

pub const MAX_ORACLE_POINTS: usize = 14;

/// Probability of every subset of `{0..n}`, indexed by bitmask.
#[derive(Debug, Clone)]
pub struct SubsetDistribution {
    n: usize,
    probs: Vec<f64>,
}

impl SubsetDistribution {
    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn prob(&self, mask: usize) -> f64 {
        self.probs[mask]
    }

    pub fn prob_of(&self, subset: &[usize]) -> f64 {
        self.probs[subset_mask(subset)]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// `(mask, P)` for every subset with positive probability.
    pub fn support(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(m, p)| (m, *p))
    }

    /// `P(i in S)`.
    pub fn inclusion(&self, i: usize) -> f64 {
        self.support().filter(|(m, _)| m & (1 << i) != 0).map(|(_, p)| p).sum()
    }

    /// `P(i in S and j in S)`.
    pub fn pair_inclusion(&self, i: usize, j: usize) -> f64 {
        let both = (1 << i) | (1 << j);
        self.support().filter(|(m, _)| m & both == both).map(|(_, p)| p).sum()
    }

    /// `sum_S P(S) g(S)`.
    pub fn expectation(&self, mut g: impl FnMut(&[usize]) -> f64) -> f64 {
        self.support().map(|(m, p)| p * g(&mask_indices(m, self.n))).sum()
    }

    /// Total-variation distance to an empirical histogram over masks.
    pub fn tv_distance(&self, counts: &[usize]) -> f64 {
        let total: usize = counts.iter().sum();
        let total = total.max(1) as f64;
        self.probs
            .iter()
            .enumerate()
            .map(|(m, p)| (p - counts.get(m).copied().unwrap_or(0) as f64 / total).abs())
            .sum::<f64>()
            / 2.0
    }
}

pub fn subset_mask(subset: &[usize]) -> usize {
    subset.iter().fold(0, |acc, &i| acc | (1 << i))
}

pub fn mask_indices(mask: usize, n: usize) -> Vec<usize> {
    (0..n).filter(|i| mask & (1 << i) != 0).collect()
}

fn check_size(l: &DMatrix<f64>) -> Result<usize> {
    let n = l.nrows();
    if l.ncols() != n {
        return Err(DppcError::DimensionMismatch {
            expected: n,
            got: l.ncols(),
        });
    }
    if n > MAX_ORACLE_POINTS {
        return Err(DppcError::TooLarge {
            n,
            max: MAX_ORACLE_POINTS,
        });
    }
    Ok(n)
}

fn principal_minor(l: &DMatrix<f64>, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 1.0;
    }
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |a, b| l[(idx[a], idx[b])]);
    sub.determinant().max(0.0)
}

/// `P(S) = det(L_S) / det(I + L)` over all subsets.
pub fn brute_force_dpp(l: &DMatrix<f64>) -> Result<SubsetDistribution> {
    let n = check_size(l)?;
    let mut probs: Vec<f64> = (0..1usize << n)
        .map(|m| principal_minor(l, &mask_indices(m, n)))
        .collect();
    let z = (DMatrix::identity(n, n) + l).determinant();
    if !(z > 0.0) {
        return Err(DppcError::NumericalDegeneracy(format!(
            "det(I + L) = {z} is not positive"
        )));
    }
    probs.iter_mut().for_each(|p| *p /= z);
    Ok(SubsetDistribution { n, probs })
}

/// `P(S) ∝ det(L_S)` restricted to `|S| = m`.
pub fn brute_force_mdpp(l: &DMatrix<f64>, m: usize) -> Result<SubsetDistribution> {
    let n = check_size(l)?;
    if m > n {
        return Err(DppcError::param(format!("m = {m} exceeds N = {n}")));
    }
    let mut probs: Vec<f64> = (0..1usize << n)
        .map(|mask| {
            if mask.count_ones() as usize == m {
                principal_minor(l, &mask_indices(mask, n))
            } else {
                0.0
            }
        })
        .collect();
    let z: f64 = probs.iter().sum();
    if !(z > 0.0) {
        return Err(DppcError::RankDeficient {
            needed: m,
            available: 0,
        });
    }
    probs.iter_mut().for_each(|p| *p /= z);
    Ok(SubsetDistribution { n, probs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_kernel_gives_empty_set() {
        let d = brute_force_dpp(&DMatrix::zeros(3, 3)).unwrap();
        assert_eq!(d.prob(0), 1.0);
    }

    #[test]
    fn identity_is_uniform() {
        let d = brute_force_dpp(&DMatrix::identity(2, 2)).unwrap();
        for m in 0..4 {
            assert!((d.prob(m) - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn two_by_two_determinant() {
        let l = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 3.0]);
        let d = brute_force_dpp(&l).unwrap();
        let z = 3.0 * 4.0 - 0.25;
        assert!((d.prob(0b11) - (6.0 - 0.25) / z).abs() < 1e-14);
        assert!((d.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_mdpp() {
        let l = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 4.0]));
        let d = brute_force_mdpp(&l, 2).unwrap();
        assert!((d.prob_of(&[0, 1]) - 2.0 / 14.0).abs() < 1e-14);
        assert!((d.prob_of(&[0, 2]) - 4.0 / 14.0).abs() < 1e-14);
        assert!((d.prob_of(&[1, 2]) - 8.0 / 14.0).abs() < 1e-14);
        let full = brute_force_mdpp(&l, 3).unwrap();
        assert!((full.prob(0b111) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_large_and_empty_mass() {
        assert!(matches!(
            brute_force_dpp(&DMatrix::identity(15, 15)),
            Err(DppcError::TooLarge { .. })
        ));
        assert!(brute_force_mdpp(&DMatrix::zeros(3, 3), 1).is_err());
    }
}
