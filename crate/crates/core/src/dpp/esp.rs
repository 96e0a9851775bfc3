//! Elementary symmetric polynomials of the eigenvalues, kept in log domain.
//!
//! `e_n(nu_1..nu_j)` overflows `f64` long before the sizes we care about (a
//! few hundred eigenvalues up to 1e6), so every table entry stores `ln e_n`.

use crate::error::{DppcError, Result};

#[inline]
pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

pub(crate) fn log_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let vals: Vec<f64> = values.into_iter().collect();
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + vals.iter().map(|v| (v - hi).exp()).sum::<f64>().ln()
}

/// Prefix table of `ln e_n(nu_1, ..., nu_j)` for `j = 0..=q`, `n = 0..=order`.
#[derive(Debug, Clone)]
pub struct ElementaryPolynomials {
    q: usize,
    order: usize,
    log: Vec<f64>,
}

impl ElementaryPolynomials {
    pub fn variables(&self) -> usize {
        self.q
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// `ln e_n` over the first `j` variables.
    #[inline]
    pub fn prefix_log(&self, j: usize, n: usize) -> f64 {
        self.log[j * (self.order + 1) + n]
    }

    /// `ln e_n` over all variables.
    pub fn log_e(&self, n: usize) -> f64 {
        self.prefix_log(self.q, n)
    }

    pub fn value(&self, n: usize) -> f64 {
        self.log_e(n).exp()
    }
}

/// Builds `ln e_0..ln e_m` with the recurrence `e_n^(j) = e_n^(j-1) + nu_j e_(n-1)^(j-1)`.
pub fn elementary_polynomials(nu: &[f64], m: usize) -> Result<ElementaryPolynomials> {
    let q = nu.len();
    if m > q {
        return Err(DppcError::param(format!(
            "polynomial order {m} exceeds the number of variables {q}"
        )));
    }
    if let Some(v) = nu.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(DppcError::param(format!(
            "eigenvalues must be finite and nonnegative, got {v}"
        )));
    }
    let w = m + 1;
    let mut log = vec![f64::NEG_INFINITY; (q + 1) * w];
    log[0] = 0.0;
    for j in 1..=q {
        let ln_nu = nu[j - 1].ln();
        let (prev, cur) = log.split_at_mut(j * w);
        let prev = &prev[(j - 1) * w..];
        cur[0] = 0.0;
        for n in 1..w {
            cur[n] = log_add_exp(prev[n], ln_nu + prev[n - 1]);
        }
    }
    Ok(ElementaryPolynomials { q, order: m, log })
}

/// Probability that eigen index `k` is selected when exactly `m` Bernoulli
/// variables with odds `nu_k` are conditioned to be one:
/// `nu_k e_(m-1)(nu without k) / e_m(nu)`.
///
/// The leave-one-out polynomial is assembled from prefix and suffix tables, so
/// no cancellation-prone subtraction is involved.
pub fn mdpp_eigen_inclusion(nu: &[f64], m: usize) -> Result<Vec<f64>> {
    let q = nu.len();
    if m == 0 {
        return Ok(vec![0.0; q]);
    }
    let prefix = elementary_polynomials(nu, m)?;
    let reversed: Vec<f64> = nu.iter().rev().cloned().collect();
    let suffix = elementary_polynomials(&reversed, m)?;
    let log_norm = prefix.log_e(m);
    if log_norm == f64::NEG_INFINITY {
        return Err(DppcError::RankDeficient {
            needed: m,
            available: nu.iter().filter(|v| **v > 0.0).count(),
        });
    }
    Ok((0..q)
        .map(|k| {
            if nu[k] == 0.0 {
                return 0.0;
            }
            // variables before k: prefix over k entries; after k: suffix over q-k-1 entries
            let loo = log_sum_exp(
                (0..m).map(|a| prefix.prefix_log(k, a) + suffix.prefix_log(q - k - 1, m - 1 - a)),
            );
            (nu[k].ln() + loo - log_norm).exp().min(1.0)
        })
        .collect())
}
