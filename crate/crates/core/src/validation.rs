//! Self-checks of the samplers against brute-force enumeration.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dpp::{
    brute_force_dpp, brute_force_mdpp, dpp_marginals, elementary_polynomials, mdpp_marginals, sample_dpp,
    sample_mdpp, subset_mask, MarginalKernelView, SubsetDistribution,
};
use crate::error::Result;
use crate::points::PointSet;
use crate::rff::{draw_frequencies, dual_matrix, feature_matrix, gaussian_kernel_matrix, sym_eig};
use crate::rng::{derive_seed, seeded};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub name: &'static str,
    pub statistic: f64,
    pub tolerance: f64,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.statistic <= self.tolerance
    }
}

/// Noise floor for the TV distance of `draws` samples over `cells` subsets.
pub fn tv_tolerance(cells: usize, draws: usize) -> f64 {
    (2.0 * (cells as f64 / (2.0 * std::f64::consts::PI * draws as f64)).sqrt()).max(0.02)
}

fn random_points<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Result<PointSet> {
    let data = (0..n * d).map(|_| rng.sample(StandardNormal)).collect();
    PointSet::new(data, n, d)
}

fn empirical_tv(
    exact: &SubsetDistribution,
    draws: usize,
    mut draw: impl FnMut() -> Result<Vec<usize>>,
) -> Result<f64> {
    let mut counts = vec![0usize; exact.probabilities().len()];
    for _ in 0..draws {
        counts[subset_mask(&draw()?)] += 1;
    }
    Ok(exact.tv_distance(&counts))
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Runs every suite on a random 6-point instance; `draws` sets the Monte Carlo size.
pub fn run_oracle_suites(seed: u64, draws: usize) -> Result<Vec<OracleReport>> {
    let mut rng = seeded(derive_seed(seed, 0x6f72_6163));
    let points = random_points(6, 2, &mut rng)?;
    let l = gaussian_kernel_matrix(&points, 1.0)?;
    let view = MarginalKernelView::from_l_ensemble(&l)?;
    let dpp = brute_force_dpp(&l)?;
    let mdpp = brute_force_mdpp(&l, 2)?;
    let n = points.len();
    let tol = tv_tolerance(1 << n, draws);

    let mut reports = Vec::new();
    let tv = empirical_tv(&dpp, draws, || Ok(sample_dpp(&view, &mut rng)?.indices))?;
    reports.push(OracleReport {
        name: "dpp_sampler_tv",
        statistic: tv,
        tolerance: tol,
    });
    let tv = empirical_tv(&mdpp, draws, || Ok(sample_mdpp(&view, 2, &mut rng)?.indices))?;
    reports.push(OracleReport {
        name: "mdpp_sampler_tv",
        statistic: tv,
        tolerance: tol,
    });

    let exact: Vec<f64> = (0..n).map(|i| dpp.inclusion(i)).collect();
    reports.push(OracleReport {
        name: "dpp_marginals",
        statistic: max_gap(&dpp_marginals(&view), &exact),
        tolerance: 1e-9,
    });
    let exact: Vec<f64> = (0..n).map(|i| mdpp.inclusion(i)).collect();
    reports.push(OracleReport {
        name: "mdpp_marginals",
        statistic: max_gap(&mdpp_marginals(&view, 2)?, &exact),
        tolerance: 1e-9,
    });

    let nu: Vec<f64> = (0..10).map(|_| rng.random_range(0.01..5.0)).collect();
    let table = elementary_polynomials(&nu, nu.len())?;
    let mut worst: f64 = 0.0;
    for order in 0..=nu.len() {
        let brute: f64 = (0usize..1 << nu.len())
            .filter(|mask| mask.count_ones() as usize == order)
            .map(|mask| (0..nu.len()).filter(|j| mask >> j & 1 == 1).map(|j| nu[j]).product::<f64>())
            .sum();
        worst = worst.max((table.value(order) - brute).abs() / brute);
    }
    reports.push(OracleReport {
        name: "elementary_polynomials",
        statistic: worst,
        tolerance: 1e-10,
    });

    let freqs = draw_frequencies(2, 3, 1.0, &mut rng)?;
    let psi = feature_matrix(&points, &freqs)?;
    let dual = sym_eig(&dual_matrix(&psi))?.values;
    let primal = sym_eig(&psi.gram())?.values;
    reports.push(OracleReport {
        name: "dual_spectrum",
        statistic: max_gap(&dual, &primal[primal.len() - dual.len()..]),
        tolerance: 1e-9,
    });
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_pass() {
        let reports = run_oracle_suites(3, 20_000).unwrap();
        assert_eq!(reports.len(), 6);
        for r in reports {
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn tolerance_floor() {
        assert_eq!(tv_tolerance(64, 200_000), 0.02);
        assert!(tv_tolerance(64, 1000) > 0.02);
    }
}
