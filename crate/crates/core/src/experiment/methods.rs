//! The sampling strategies compared by the experiment harness.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::config::Method;
use crate::coreset::MethodSample;
use crate::dpp::{mdpp_marginals, sample_mdpp, MarginalKernelView, WeightedSample};
use crate::error::{DppcError, Result};
use crate::kmeans::d2_seeding;
use crate::points::PointSet;
use crate::rff::{draw_frequencies, dual_matrix, feature_matrix, sym_eig};
use crate::rng::{derive_seed, seeded};
use crate::sensitivity::{
    bicriteria_sensitivity_bound, one_means_sensitivity, split_outliers, SensitivityProfile,
};

const KERNEL_SALT: u64 = 0x6b65_726e;
const SPLIT_SALT: u64 = 0x7370_6c69;

/// RFF L-ensemble of `points` in dual form.
pub fn build_rff_kernel<R: Rng + ?Sized>(
    points: &PointSet,
    s: f64,
    r: usize,
    rng: &mut R,
) -> Result<MarginalKernelView> {
    let freqs = draw_frequencies(points.dim(), r, s, rng)?;
    let psi = feature_matrix(points, &freqs)?;
    let dual = sym_eig(&dual_matrix(&psi))?;
    MarginalKernelView::from_dual(psi, &dual)
}

/// One m-DPP coreset sample: random Fourier features, dual eigendecomposition,
/// m-DPP draw, and weights `1 / pi_s` from the exact m-DPP marginals.
pub fn run_pipeline_mdpp<R: Rng + ?Sized>(
    points: &PointSet,
    m: usize,
    s: f64,
    r: usize,
    rng: &mut R,
) -> Result<WeightedSample> {
    if m == 0 {
        return Ok(WeightedSample::default());
    }
    let view = build_rff_kernel(points, s, r, rng)?;
    sample_mdpp(&view, m, rng)
}

/// Parameters of one `m` cell.
#[derive(Debug, Clone)]
pub struct CellSpec {
    pub m: usize,
    pub bandwidth: f64,
    pub features: usize,
    pub k: usize,
    pub seed: u64,
    pub outlier_threshold: Option<f64>,
    pub refresh_kernel: bool,
}

/// Everything a method needs that does not change across trials of a cell.
pub struct MethodContext<'a> {
    points: &'a PointSet,
    spec: CellSpec,
    kept: Vec<usize>,
    kept_points: PointSet,
    outliers: Vec<usize>,
    kernel: Option<MarginalKernelView>,
    /// Why the shared kernel could not be built; only kernel methods fail on it.
    kernel_error: Option<DppcError>,
    /// m-DPP inclusion probabilities over all points (outliers at 1).
    marginals: Option<Vec<f64>>,
    matched: Option<(Vec<f64>, WeightedIndex<f64>)>,
    uniform: WeightedIndex<f64>,
    sensitivity: Option<(Vec<f64>, WeightedIndex<f64>)>,
}

fn sampler(p: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(p).map_err(|e| DppcError::NumericalDegeneracy(format!("sampling weights: {e}")))
}

impl<'a> MethodContext<'a> {
    pub fn prepare(points: &'a PointSet, methods: &[Method], spec: CellSpec) -> Result<Self> {
        let n = points.len();
        if spec.m == 0 {
            return Err(DppcError::Config("m must be positive".into()));
        }
        let (kept, outliers) = match spec.outlier_threshold {
            Some(t) => {
                let profile = cell_sensitivity(points, spec.k, derive_seed(spec.seed, SPLIT_SALT))?;
                let split = split_outliers(&profile, t.max(1.0 / n as f64))?;
                (split.kept_indices, split.outlier_indices)
            }
            None => ((0..n).collect(), Vec::new()),
        };
        if outliers.len() >= spec.m {
            return Err(DppcError::Config(format!(
                "{} outliers leave no room for m = {}",
                outliers.len(),
                spec.m
            )));
        }
        let kept_points = if outliers.is_empty() {
            points.clone()
        } else {
            points.select(&kept)?
        };

        let mut ctx = Self {
            points,
            kept,
            kept_points,
            outliers,
            kernel: None,
            kernel_error: None,
            marginals: None,
            matched: None,
            uniform: sampler(&vec![1.0; n])?,
            sensitivity: None,
            spec,
        };
        if methods.iter().any(|m| m.uses_kernel()) {
            match ctx.shared_kernel() {
                Ok((view, pi)) => {
                    if methods.contains(&Method::MatchedIid) {
                        let p: Vec<f64> = pi.iter().map(|v| v / ctx.spec.m as f64).collect();
                        let dist = sampler(&p)?;
                        ctx.matched = Some((p, dist));
                    }
                    ctx.kernel = Some(view);
                    ctx.marginals = Some(pi);
                }
                Err(e) => ctx.kernel_error = Some(e),
            }
        }
        if methods.contains(&Method::SensitivityIid) && ctx.spec.k == 1 {
            let p = one_means_sensitivity(points)?.probabilities();
            let dist = sampler(&p)?;
            ctx.sensitivity = Some((p, dist));
        }
        Ok(ctx)
    }

    /// Kernel of the kept points and m-DPP marginals over all points (outliers at 1).
    fn shared_kernel(&self) -> Result<(MarginalKernelView, Vec<f64>)> {
        let mut rng = seeded(derive_seed(self.spec.seed, KERNEL_SALT ^ self.spec.m as u64));
        let view =
            build_rff_kernel(&self.kept_points, self.spec.bandwidth, self.spec.features, &mut rng)?.materialize();
        let inner = mdpp_marginals(&view, self.inner_m())?;
        let mut pi = vec![1.0; self.points.len()];
        for (&i, p) in self.kept.iter().zip(inner) {
            pi[i] = p;
        }
        Ok((view, pi))
    }

    /// The error that prevented building the shared kernel, if any.
    pub fn kernel_error(&self) -> Option<&DppcError> {
        self.kernel_error.as_ref()
    }

    fn inner_m(&self) -> usize {
        self.spec.m - self.outliers.len()
    }

    pub fn spec(&self) -> &CellSpec {
        &self.spec
    }

    /// m-DPP inclusion probabilities of every point, when a shared kernel exists.
    pub fn marginals(&self) -> Option<&[f64]> {
        self.marginals.as_deref()
    }

    pub fn outliers(&self) -> &[usize] {
        &self.outliers
    }

    fn mdpp<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<WeightedSample> {
        let inner = match &self.kernel {
            Some(view) if !self.spec.refresh_kernel => sample_mdpp(view, self.inner_m(), rng)?,
            _ => run_pipeline_mdpp(
                &self.kept_points,
                self.inner_m(),
                self.spec.bandwidth,
                self.spec.features,
                rng,
            )?,
        };
        if self.outliers.is_empty() {
            return Ok(inner);
        }
        let mut indices: Vec<usize> = inner.indices.iter().map(|&i| self.kept[i]).collect();
        let mut pi = inner.inclusion_probs;
        indices.extend(&self.outliers);
        pi.extend(std::iter::repeat_n(1.0, self.outliers.len()));
        WeightedSample::from_inclusion(indices, pi)
    }

    fn iid<R: Rng + ?Sized>(&self, p: &[f64], dist: &WeightedIndex<f64>, rng: &mut R) -> MethodSample {
        let draws: Vec<usize> = (0..self.spec.m).map(|_| dist.sample(rng)).collect();
        MethodSample::from_draws(&draws, p)
    }
}

fn cell_sensitivity(points: &PointSet, k: usize, seed: u64) -> Result<SensitivityProfile> {
    if k == 1 {
        one_means_sensitivity(points)
    } else {
        Ok(bicriteria_sensitivity_bound(points, k, &mut seeded(seed))?.0)
    }
}

/// One sample of `method` for the cell described by `ctx`.
pub fn run_method<R: Rng + ?Sized>(method: Method, ctx: &MethodContext, rng: &mut R) -> Result<MethodSample> {
    if let (true, Some(e)) = (method.uses_kernel(), &ctx.kernel_error) {
        return Err(DppcError::Config(format!("no kernel for {method}: {e}")));
    }
    match method {
        Method::Mdpp => Ok(MethodSample::Correlated(ctx.mdpp(rng)?)),
        Method::MatchedIid => {
            let (p, dist) = ctx
                .matched
                .as_ref()
                .ok_or_else(|| DppcError::Config("matched_iid was not prepared".into()))?;
            Ok(ctx.iid(p, dist, rng))
        }
        Method::UniformIid => {
            let p = vec![1.0 / ctx.points.len() as f64; ctx.points.len()];
            Ok(ctx.iid(&p, &ctx.uniform, rng))
        }
        Method::SensitivityIid => match &ctx.sensitivity {
            Some((p, dist)) => Ok(ctx.iid(p, dist, rng)),
            None => {
                let (_, p) = bicriteria_sensitivity_bound(ctx.points, ctx.spec.k, rng)?;
                let dist = sampler(&p)?;
                Ok(ctx.iid(&p, &dist, rng))
            }
        },
        Method::D2 => Ok(MethodSample::Unweighted(d2_seeding(ctx.points, ctx.spec.m, rng)?)),
    }
}
