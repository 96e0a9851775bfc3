//! Sample-size requirements for DPP and m-DPP coresets.
//!
//! Covering numbers enter only through `log n`, which is passed directly.

use crate::error::{DppcError, Result};

#[derive(Debug, Clone)]
pub struct BoundInputs {
    pub sigma: Vec<f64>,
    /// Inclusion probabilities `pi_i`.
    pub pi: Vec<f64>,
    /// Expected (DPP) or exact (m-DPP) sample size.
    pub mu: f64,
    pub epsilon: f64,
    pub delta: f64,
    /// Natural log of the covering number `n`.
    pub log_n: f64,
}

impl BoundInputs {
    fn validate(&self) -> Result<()> {
        if self.sigma.is_empty() || self.sigma.len() != self.pi.len() {
            return Err(DppcError::DimensionMismatch {
                expected: self.sigma.len(),
                got: self.pi.len(),
            });
        }
        check_unit("epsilon", self.epsilon)?;
        check_unit("delta", self.delta)?;
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(DppcError::param("mu must be positive"));
        }
        if !(self.log_n >= 0.0) || !self.log_n.is_finite() {
            return Err(DppcError::param("log n must be finite and nonnegative"));
        }
        if self.sigma.iter().chain(&self.pi).any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(DppcError::param("sensitivities and probabilities must be positive"));
        }
        Ok(())
    }

    /// `max_i sigma_i / pi_bar_i` with `pi_bar = pi / mu`.
    pub fn max_ratio(&self) -> f64 {
        self.sigma
            .iter()
            .zip(&self.pi)
            .map(|(s, p)| s * self.mu / p)
            .fold(0.0, f64::max)
    }

    pub fn pi_bar_min(&self) -> f64 {
        self.pi.iter().cloned().fold(f64::INFINITY, f64::min) / self.mu
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(DppcError::param(format!("{name} must lie in (0, 1), got {v}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuStar {
    pub mu1: f64,
    pub mu2: f64,
    pub mu_star: f64,
    /// `N sigma_min >= 1`, under which `mu1 >= mu2`.
    pub lemma_holds: bool,
}

/// DPP requirement `mu >= max(mu1*, mu2*)`.
pub fn thm2_mu_star(inputs: &BoundInputs) -> Result<MuStar> {
    inputs.validate()?;
    let eps = inputs.epsilon;
    let lead = 32.0 / (eps * eps);
    let r = inputs.max_ratio();
    let mu1 = lead * (eps * r + 4.0 * r * r) * (10f64.ln() + inputs.log_n - inputs.delta.ln());
    let n = inputs.sigma.len() as f64;
    let np = n * inputs.pi_bar_min();
    let mu2 = lead * (eps / np + 4.0 / (np * np)) * (10.0 / inputs.delta).ln();
    let sigma_min = inputs.sigma.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(MuStar {
        mu1,
        mu2,
        mu_star: mu1.max(mu2),
        lemma_holds: n * sigma_min >= 1.0,
    })
}

/// m-DPP requirement `m >= 32/eps^2 (max sigma/pi_bar)^2 log(4n/delta)`.
pub fn thm3_m_star(inputs: &BoundInputs) -> Result<f64> {
    inputs.validate()?;
    let r = inputs.max_ratio();
    Ok(32.0 / (inputs.epsilon * inputs.epsilon)
        * r
        * r
        * (4f64.ln() + inputs.log_n - inputs.delta.ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessKind {
    Dpp,
    MDpp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorollaryReport {
    /// `min pi_i / sigma_i`.
    pub alpha: f64,
    /// `max (pi_i / sigma_i) / alpha`.
    pub beta: f64,
    /// Right-hand side that `alpha / beta` must reach.
    pub requirement: f64,
    pub satisfied: bool,
    /// Whether any `alpha <= 1 / sigma_max` can reach the requirement.
    pub admissible: bool,
    /// Sample size implied when the conditions hold.
    pub implied_bound: f64,
}

/// Tightest `alpha sigma_i <= pi_i <= alpha beta sigma_i` and the sample size it implies.
pub fn corollary_conditions(
    sigma: &[f64],
    pi: &[f64],
    epsilon: f64,
    delta: f64,
    log_n: f64,
    total: f64,
    kind: ProcessKind,
) -> Result<CorollaryReport> {
    if sigma.is_empty() || sigma.len() != pi.len() {
        return Err(DppcError::DimensionMismatch {
            expected: sigma.len(),
            got: pi.len(),
        });
    }
    check_unit("epsilon", epsilon)?;
    check_unit("delta", delta)?;
    if sigma.iter().any(|s| !(*s > 0.0)) {
        return Err(DppcError::param("every sensitivity must be positive"));
    }
    if pi.iter().any(|p| !(*p > 0.0 && *p <= 1.0)) {
        return Err(DppcError::param("inclusion probabilities must lie in (0, 1]"));
    }
    if !(total > 0.0) || !(log_n >= 0.0) {
        return Err(DppcError::param("total sensitivity must be positive and log n nonnegative"));
    }
    let ratios: Vec<f64> = pi.iter().zip(sigma).map(|(p, s)| p / s).collect();
    let alpha = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let beta = ratios.iter().cloned().fold(0.0, f64::max) / alpha;
    let lead = 32.0 / (epsilon * epsilon);
    let (requirement, implied_bound) = match kind {
        ProcessKind::Dpp => {
            let log_term = 10f64.ln() + log_n - delta.ln();
            (
                lead * (epsilon + 4.0 * total) * log_term,
                lead * beta * total * (epsilon + 4.0 * total) * log_term,
            )
        }
        ProcessKind::MDpp => {
            let log_term = 4f64.ln() + log_n - delta.ln();
            (lead * total * log_term, lead * beta * total * total * log_term)
        }
    };
    let sigma_max = sigma.iter().cloned().fold(0.0, f64::max);
    Ok(CorollaryReport {
        alpha,
        beta,
        requirement,
        satisfied: alpha / beta >= requirement,
        admissible: 1.0 / sigma_max >= requirement,
        implied_bound,
    })
}

/// `k d log(24 rho^2 / (eps <f>opt) + 1)`.
pub fn kmeans_covering_number_log(
    rho: f64,
    epsilon: f64,
    f_opt_mean: f64,
    k: usize,
    d: usize,
) -> Result<f64> {
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(DppcError::param("diameter must be finite and nonnegative"));
    }
    if !(epsilon > 0.0) || !(f_opt_mean > 0.0) || k == 0 || d == 0 {
        return Err(DppcError::param("epsilon, <f>opt, k and d must be positive"));
    }
    Ok((k * d) as f64 * (24.0 * rho * rho / (epsilon * f_opt_mean)).ln_1p())
}
