use nalgebra::DMatrix;

use crate::error::{DppcError, Result};
use crate::rff::{numerically_nonzero, sym_eig, FeatureMatrix, SpectralPair};

/// Where the L-ensemble eigenvectors `u_k` come from.
#[derive(Debug, Clone)]
pub enum EigenvectorSource {
    /// `N x q` matrix whose columns are the `u_k`.
    Explicit(DMatrix<f64>),
    /// Dual eigenvectors `v_k` (`2r x q`); `u_k = psi^T v_k / sqrt(nu_k)` on demand.
    Dual {
        features: FeatureMatrix,
        vectors: DMatrix<f64>,
    },
}

/// Spectral view of an L-ensemble restricted to its numerically nonzero part.
///
/// The marginal kernel is `K = sum_k nu_k / (1 + nu_k) u_k u_k^T`.
#[derive(Debug, Clone)]
pub struct MarginalKernelView {
    n: usize,
    values: Vec<f64>,
    source: EigenvectorSource,
}

impl MarginalKernelView {
    /// From explicit eigenpairs (`vectors` is `N x p`). Eigenvalues at or below
    /// the rank tolerance are dropped.
    pub fn from_eigenpairs(vectors: DMatrix<f64>, values: &[f64]) -> Result<Self> {
        if vectors.ncols() != values.len() {
            return Err(DppcError::DimensionMismatch {
                expected: vectors.ncols(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(DppcError::param("eigenvalues must be finite"));
        }
        let n = vectors.nrows();
        let kept = numerically_nonzero(values);
        let u = DMatrix::from_fn(n, kept.len(), |i, c| vectors[(i, kept[c])]);
        Ok(Self {
            n,
            values: kept.iter().map(|&k| values[k]).collect(),
            source: EigenvectorSource::Explicit(u),
        })
    }

    /// Diagonalizes an explicit `N x N` L-ensemble.
    pub fn from_l_ensemble(l: &DMatrix<f64>) -> Result<Self> {
        let eig = sym_eig(l)?;
        Self::from_eigenpairs(eig.vectors, &eig.values)
    }

    /// From the eigendecomposition of the dual matrix `psi psi^T`.
    pub fn from_dual(features: FeatureMatrix, dual: &SpectralPair) -> Result<Self> {
        if dual.vectors.nrows() != features.n_features() {
            return Err(DppcError::DimensionMismatch {
                expected: features.n_features(),
                got: dual.vectors.nrows(),
            });
        }
        let kept = numerically_nonzero(&dual.values);
        let vectors = DMatrix::from_fn(dual.vectors.nrows(), kept.len(), |i, c| {
            dual.vectors[(i, kept[c])]
        });
        Ok(Self {
            n: features.n_points(),
            values: kept.iter().map(|&k| dual.values[k]).collect(),
            source: EigenvectorSource::Dual { features, vectors },
        })
    }

    /// Number of points `N`.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// L-ensemble eigenvalues of the retained directions.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// Numerical rank.
    pub fn rank(&self) -> usize {
        self.values.len()
    }

    /// Eigenvalues of `K`: `nu / (1 + nu)`.
    pub fn marginal_eigenvalues(&self) -> Vec<f64> {
        self.values.iter().map(|v| v / (1.0 + v)).collect()
    }

    /// Expected DPP cardinality `Tr(K)`.
    pub fn expected_size(&self) -> f64 {
        self.marginal_eigenvalues().iter().sum()
    }

    pub fn source(&self) -> &EigenvectorSource {
        &self.source
    }

    /// The `N x |cols|` matrix of eigenvectors `u_k`, `k` in `cols`.
    pub fn eigenvectors(&self, cols: &[usize]) -> DMatrix<f64> {
        match &self.source {
            EigenvectorSource::Explicit(u) => {
                DMatrix::from_fn(self.n, cols.len(), |i, c| u[(i, cols[c])])
            }
            EigenvectorSource::Dual { features, vectors } => {
                let mut v = DMatrix::zeros(vectors.nrows(), cols.len());
                for (c, &k) in cols.iter().enumerate() {
                    v.set_column(c, &(vectors.column(k) / self.values[k].sqrt()));
                }
                features.psi.transpose() * v
            }
        }
    }

    /// `(u_1(i), ..., u_q(i))`.
    pub fn row(&self, i: usize) -> Vec<f64> {
        match &self.source {
            EigenvectorSource::Explicit(u) => u.row(i).iter().cloned().collect(),
            EigenvectorSource::Dual { features, vectors } => {
                let psi_i = features.psi.column(i);
                (0..self.values.len())
                    .map(|k| psi_i.dot(&vectors.column(k)) / self.values[k].sqrt())
                    .collect()
            }
        }
    }

    /// Converts a dual view into an explicit one so later queries skip the lift.
    pub fn materialize(&self) -> Self {
        match &self.source {
            EigenvectorSource::Explicit(_) => self.clone(),
            EigenvectorSource::Dual { .. } => {
                let all: Vec<usize> = (0..self.values.len()).collect();
                Self {
                    n: self.n,
                    values: self.values.clone(),
                    source: EigenvectorSource::Explicit(self.eigenvectors(&all)),
                }
            }
        }
    }

    /// `sum_k c_k u_k(i)^2` for every `i`.
    pub fn weighted_diagonal(&self, coeffs: &[f64]) -> Vec<f64> {
        debug_assert_eq!(coeffs.len(), self.values.len());
        match &self.source {
            EigenvectorSource::Explicit(u) => diag_of(u, coeffs),
            EigenvectorSource::Dual { .. } => {
                let all: Vec<usize> = (0..self.values.len()).collect();
                diag_of(&self.eigenvectors(&all), coeffs)
            }
        }
    }

    /// `sum_k c_k u_k(i)^2` for the listed `i` only.
    pub fn weighted_diagonal_at(&self, coeffs: &[f64], indices: &[usize]) -> Vec<f64> {
        indices
            .iter()
            .map(|&i| {
                self.row(i)
                    .iter()
                    .zip(coeffs)
                    .map(|(u, c)| c * u * u)
                    .sum()
            })
            .collect()
    }

    /// `sum_k c_k u_k(i) u_k(j)`.
    pub fn weighted_entry(&self, coeffs: &[f64], i: usize, j: usize) -> f64 {
        let ri = self.row(i);
        let rj = self.row(j);
        ri.iter()
            .zip(&rj)
            .zip(coeffs)
            .map(|((a, b), c)| c * a * b)
            .sum()
    }

    /// Dense marginal kernel `K` (N x N). Only for small N.
    pub fn marginal_kernel(&self) -> DMatrix<f64> {
        let all: Vec<usize> = (0..self.values.len()).collect();
        let u = self.eigenvectors(&all);
        let c = self.marginal_eigenvalues();
        let scaled = DMatrix::from_fn(u.nrows(), u.ncols(), |i, k| u[(i, k)] * c[k]);
        scaled * u.transpose()
    }
}

fn diag_of(u: &DMatrix<f64>, coeffs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.nrows()];
    for (k, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        for (o, v) in out.iter_mut().zip(u.column(k).iter()) {
            *o += c * v * v;
        }
    }
    out
}
