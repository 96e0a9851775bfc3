//! Gaussian L-ensembles, exactly or through random Fourier features, and the
//! spectral data the samplers consume.
//!
//! The Gaussian kernel here is `exp(-|x - y|^2 / s^2)`. Its random Fourier
//! features draw frequencies from `N(0, 2/s^2)` per coordinate and embed each
//! point as `(cos(w_l . x), sin(w_l . x))_l / sqrt(r)`, so every feature column
//! has unit norm and `psi_i . psi_j` is an unbiased estimate of the kernel.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{DppcError, Result};
use crate::points::{sq_dist, PointSet};

/// Relative threshold below which an eigenvalue is treated as numerically zero.
pub const RANK_TOLERANCE: f64 = 1e-12;

/// Frequencies `r x d` for the Gaussian kernel with bandwidth `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyMatrix {
    pub omegas: DMatrix<f64>,
    pub bandwidth: f64,
}

impl FrequencyMatrix {
    pub fn count(&self) -> usize {
        self.omegas.nrows()
    }

    pub fn dim(&self) -> usize {
        self.omegas.ncols()
    }
}

/// The `2r x N` RFF matrix; column `j` is the embedding of point `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub psi: DMatrix<f64>,
    pub bandwidth: f64,
}

impl FeatureMatrix {
    pub fn n_points(&self) -> usize {
        self.psi.ncols()
    }

    pub fn n_features(&self) -> usize {
        self.psi.nrows()
    }

    /// The approximated L-ensemble `psi^T psi` (N x N). Only for small N.
    pub fn gram(&self) -> DMatrix<f64> {
        self.psi.transpose() * &self.psi
    }
}

/// Eigenpairs of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SpectralPair {
    /// Orthonormal eigenvectors as columns, `p x q`.
    pub vectors: DMatrix<f64>,
    pub values: Vec<f64>,
}

fn check_bandwidth(s: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(DppcError::param(format!("bandwidth must be positive, got {s}")));
    }
    Ok(())
}

pub fn gaussian_kernel_entry(x: &[f64], y: &[f64], s: f64) -> Result<f64> {
    check_bandwidth(s)?;
    if x.len() != y.len() {
        return Err(DppcError::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok((-sq_dist(x, y) / (s * s)).exp())
}

/// Exact `N x N` Gaussian L-ensemble.
pub fn gaussian_kernel_matrix(points: &PointSet, s: f64) -> Result<DMatrix<f64>> {
    check_bandwidth(s)?;
    let n = points.len();
    let inv = 1.0 / (s * s);
    let mut l = DMatrix::zeros(n, n);
    for i in 0..n {
        l[(i, i)] = 1.0;
        for j in 0..i {
            let v = (-sq_dist(points.point(i), points.point(j)) * inv).exp();
            l[(i, j)] = v;
            l[(j, i)] = v;
        }
    }
    Ok(l)
}

pub fn draw_frequencies<R: Rng + ?Sized>(
    d: usize,
    r: usize,
    s: f64,
    rng: &mut R,
) -> Result<FrequencyMatrix> {
    if r == 0 {
        return Err(DppcError::param("number of random features must be at least 1"));
    }
    if d == 0 {
        return Err(DppcError::param("dimension must be at least 1"));
    }
    check_bandwidth(s)?;
    let normal = Normal::new(0.0, std::f64::consts::SQRT_2 / s)
        .map_err(|e| DppcError::param(e.to_string()))?;
    // Row-major fill so the draw order does not depend on matrix storage.
    let mut omegas = DMatrix::zeros(r, d);
    for l in 0..r {
        for c in 0..d {
            omegas[(l, c)] = normal.sample(rng);
        }
    }
    Ok(FrequencyMatrix {
        omegas,
        bandwidth: s,
    })
}

pub fn feature_matrix(points: &PointSet, freqs: &FrequencyMatrix) -> Result<FeatureMatrix> {
    if freqs.dim() != points.dim() {
        return Err(DppcError::DimensionMismatch {
            expected: points.dim(),
            got: freqs.dim(),
        });
    }
    let r = freqs.count();
    let n = points.len();
    let scale = 1.0 / (r as f64).sqrt();
    let mut psi = DMatrix::zeros(2 * r, n);
    for (j, x) in points.iter().enumerate() {
        let mut col = psi.column_mut(j);
        for l in 0..r {
            let phase: f64 = freqs.omegas.row(l).iter().zip(x).map(|(w, v)| w * v).sum();
            let (sin, cos) = phase.sin_cos();
            col[l] = cos * scale;
            col[r + l] = sin * scale;
        }
    }
    Ok(FeatureMatrix {
        psi,
        bandwidth: freqs.bandwidth,
    })
}

/// `C = psi psi^T`, symmetrized exactly.
pub fn dual_matrix(features: &FeatureMatrix) -> DMatrix<f64> {
    let c = &features.psi * features.psi.transpose();
    let ct = c.transpose();
    (c + ct) * 0.5
}

/// Symmetric eigendecomposition, eigenvalues ascending.
///
/// Negative eigenvalues within roundoff of zero are clamped to exactly 0.
pub fn sym_eig(m: &DMatrix<f64>) -> Result<SpectralPair> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(DppcError::DimensionMismatch {
            expected: n,
            got: m.ncols(),
        });
    }
    if n == 0 {
        return Ok(SpectralPair {
            vectors: DMatrix::zeros(0, 0),
            values: Vec::new(),
        });
    }
    let scale = m.amax().max(1.0);
    for i in 0..n {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-8 * scale {
                return Err(DppcError::param(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let eig = m
        .clone()
        .try_symmetric_eigen(f64::EPSILON, 100 * n + 1000)
        .ok_or(DppcError::NonConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let max_abs = eig.eigenvalues.amax();
    let clamp = RANK_TOLERANCE * max_abs.max(1.0);
    let values = order
        .iter()
        .map(|&k| {
            let v = eig.eigenvalues[k];
            if v < 0.0 && -v <= clamp {
                0.0
            } else {
                v
            }
        })
        .collect();
    let vectors = DMatrix::from_fn(n, n, |i, c| eig.eigenvectors[(i, order[c])]);
    Ok(SpectralPair { vectors, values })
}

/// Indices of eigenvalues above the relative rank tolerance.
pub fn numerically_nonzero(values: &[f64]) -> Vec<usize> {
    let max = values.iter().cloned().fold(0.0_f64, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let cut = RANK_TOLERANCE * max;
    (0..values.len()).filter(|&k| values[k] > cut).collect()
}

/// Lifts dual eigenvectors to eigenvectors of `psi^T psi`: `u_k = psi^T v_k / sqrt(nu_k)`.
pub fn reconstruct_eigenvectors(
    features: &FeatureMatrix,
    dual: &SpectralPair,
    kept: &[usize],
) -> Result<DMatrix<f64>> {
    let n = features.n_points();
    if kept.is_empty() {
        return Ok(DMatrix::zeros(n, 0));
    }
    let max = dual.values.iter().cloned().fold(0.0_f64, f64::max);
    let cut = RANK_TOLERANCE * max;
    let mut v = DMatrix::zeros(features.n_features(), kept.len());
    for (c, &k) in kept.iter().enumerate() {
        let nu = *dual
            .values
            .get(k)
            .ok_or_else(|| DppcError::param(format!("eigen index {k} out of range")))?;
        if !(nu > cut) {
            return Err(DppcError::RankDeficient {
                needed: kept.len(),
                available: numerically_nonzero(&dual.values).len(),
            });
        }
        v.set_column(c, &(dual.vectors.column(k) / nu.sqrt()));
    }
    Ok(features.psi.transpose() * v)
}

/// Mean Euclidean distance over `pairs` random pairs of distinct points.
///
/// When `pairs` covers every unordered pair, the exact mean over all pairs is
/// returned instead.
pub fn mean_interdistance<R: Rng + ?Sized>(
    points: &PointSet,
    pairs: usize,
    rng: &mut R,
) -> Result<f64> {
    let n = points.len();
    if n < 2 {
        return Err(DppcError::param("mean interdistance needs at least two points"));
    }
    if pairs == 0 {
        return Err(DppcError::param("pair count must be positive"));
    }
    let total_pairs = n * (n - 1) / 2;
    let dist = |i: usize, j: usize| sq_dist(points.point(i), points.point(j)).sqrt();
    if pairs >= total_pairs {
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..i {
                sum += dist(i, j);
            }
        }
        return Ok(sum / total_pairs as f64);
    }
    let mut sum = 0.0;
    for _ in 0..pairs {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        sum += dist(i, j);
    }
    Ok(sum / pairs as f64)
}

/// Default bandwidth: mean interdistance over `min(1000, N(N-1)/2)` pairs.
pub fn default_bandwidth<R: Rng + ?Sized>(points: &PointSet, rng: &mut R) -> Result<f64> {
    let n = points.len();
    let pairs = 1000.min(n * n.saturating_sub(1) / 2).max(1);
    let s = mean_interdistance(points, pairs, rng)?;
    if !(s > 0.0) {
        return Err(DppcError::DegenerateData(
            "all points coincide; bandwidth would be zero".into(),
        ));
    }
    Ok(s)
}
