use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{Auto, DatasetSpec, ExperimentConfig, Method};
use super::methods::{run_method, CellSpec, MethodContext};
use crate::coreset::{coreset_hits, MethodSample, SuccessProtocol, WeightedSubset};
use crate::datasets::{
    gaussian_with_outliers, load_csv, sbm_critical_zeta, sbm_graph, spectral_features, CsvOptions,
    IsolatedPolicy, SbmSpec,
};
use crate::error::{DppcError, Result};
use crate::kmeans::{assign_labels, d2_seeding_weighted, weighted_lloyd, LloydInit, LloydOptions};
use crate::metrics::adjusted_rand_index;
use crate::points::PointSet;
use crate::rff::default_bandwidth;
use crate::rng::{derive_seed, seeded, stream_rng, DppcRng};

const DATA_SALT: u64 = 0x6461_7461;
const BANDWIDTH_SALT: u64 = 0x6261_6e64;

/// An automatic bandwidth is multiplied by this until the kernel rank reaches m.
const BANDWIDTH_SHRINK: f64 = 0.8;
const MAX_BANDWIDTH_SHRINKS: usize = 20;

pub const CSV_HEADER: &str = "method,m,s,r,seed,epsilon,estimator,success_rate,ari,wall_ms";

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: Method,
    pub m: usize,
    /// Bandwidth and feature count, for methods that use the kernel.
    pub s: Option<f64>,
    pub r: Option<usize>,
    pub seed: u64,
    pub epsilon: f64,
    pub estimator: &'static str,
    /// Empty when the method failed for this cell.
    pub success_rate: Option<f64>,
    pub ari: Option<f64>,
    pub wall_ms: Option<f64>,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ResultRow {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.method,
            self.m,
            opt(self.s),
            opt(self.r),
            self.seed,
            self.epsilon,
            self.estimator,
            opt(self.success_rate),
            opt(self.ari),
            opt(self.wall_ms.map(|w| format!("{w:.3}"))),
        )
    }
}

/// Builds the dataset of a config; deterministic given the seed.
pub fn load_dataset(config: &ExperimentConfig) -> Result<PointSet> {
    let mut rng = seeded(derive_seed(config.seed, DATA_SALT));
    match &config.dataset {
        DatasetSpec::Gaussian { n, d, q } => gaussian_with_outliers(*n, *d, *q, &mut rng),
        DatasetSpec::Sbm {
            n,
            blocks,
            zeta_factor,
            degree,
        } => {
            let zeta = zeta_factor * sbm_critical_zeta(*degree, *blocks)?;
            let spec = SbmSpec::balanced(*n, *blocks, zeta.min(1.0), *degree)?;
            let graph = sbm_graph(&spec, &mut rng)?;
            Ok(spectral_features(&graph, *blocks, IsolatedPolicy::Drop)?.features)
        }
        DatasetSpec::Csv {
            path,
            header,
            labels,
        } => load_csv(
            path,
            CsvOptions {
                header: *header,
                labels: *labels,
            },
        ),
    }
}

/// A bandwidth of the grid on `points`: the given value or the mean interdistance.
pub fn resolve_bandwidth(config: &ExperimentConfig, value: Auto<f64>, points: &PointSet) -> Result<f64> {
    match value {
        Auto::Value(s) => Ok(s),
        Auto::Auto => default_bandwidth(points, &mut seeded(derive_seed(config.seed, BANDWIDTH_SALT))),
    }
}

/// ARI of weighted Lloyd on the sample against the ground truth of all points.
fn sample_ari(
    points: &PointSet,
    truth: &[usize],
    subset: &WeightedSubset,
    k: usize,
    restarts: usize,
    rng: &mut DppcRng,
) -> Result<Option<f64>> {
    if subset.is_empty() {
        return Ok(None);
    }
    let sample = points.select(&subset.indices)?;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..restarts {
        let init = match d2_seeding_weighted(&sample, Some(&subset.weights), k, rng) {
            Ok(init) => init,
            Err(_) => return Ok(None),
        };
        let fit = match weighted_lloyd(
            &sample,
            Some(&subset.weights),
            k,
            LloydInit::Indices(init),
            LloydOptions::default(),
        ) {
            Ok(fit) => fit,
            Err(DppcError::InvalidParameter(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|(c, _)| fit.cost < *c) {
            best = Some((fit.cost, assign_labels(points, &fit.centroids)?));
        }
    }
    match best {
        Some((_, labels)) => Ok(Some(adjusted_rand_index(truth, &labels)?)),
        None => Ok(None),
    }
}

/// Success rate and mean ARI of one `(method, m)` cell.
fn run_cell(
    points: &PointSet,
    method: Method,
    ctx: &MethodContext,
    config: &ExperimentConfig,
    truth: Option<&[usize]>,
) -> Result<(f64, Option<f64>)> {
    let protocol = SuccessProtocol {
        epsilon: config.epsilon,
        theta_draws: config.theta_draws,
        trials: config.trials,
        k: config.k,
        seed: config.seed,
    };
    let outcomes = (0..config.trials)
        .into_par_iter()
        .map(|t| -> Result<(usize, Option<f64>)> {
            let mut rng = stream_rng(config.seed, t as u64);
            let sample: MethodSample = run_method(method, ctx, &mut rng)?;
            let subset = sample.weighted(points, config.estimator)?;
            let hits = coreset_hits(points, &subset, &protocol, t)?;
            let ari = match truth {
                Some(truth) => sample_ari(points, truth, &subset, config.k, config.restarts, &mut rng)?,
                None => None,
            };
            Ok((hits, ari))
        })
        .collect::<Result<Vec<_>>>()?;
    let hits: usize = outcomes.iter().map(|o| o.0).sum();
    let rate = hits as f64 / (config.trials * config.theta_draws) as f64;
    let aris: Vec<f64> = outcomes.iter().filter_map(|o| o.1).collect();
    let ari = (!aris.is_empty()).then(|| aris.iter().sum::<f64>() / aris.len() as f64);
    Ok((rate, ari))
}

/// Runs every `(m, method)` cell and streams rows to `out` as they complete.
pub fn run_experiment<W: Write + Send>(config: &ExperimentConfig, out: &mut W) -> Result<Vec<ResultRow>> {
    config.validate()?;
    match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| DppcError::Config(format!("thread pool: {e}")))?
            .install(|| run_inner(config, out)),
        None => run_inner(config, out),
    }
}

fn run_inner<W: Write + Send>(config: &ExperimentConfig, out: &mut W) -> Result<Vec<ResultRow>> {
    let points = load_dataset(config)?;
    let truth = if config.dataset.has_ground_truth() && config.k >= 2 {
        points.labels().map(<[usize]>::to_vec)
    } else {
        None
    };
    writeln!(out, "{CSV_HEADER}")?;
    out.flush()?;
    let mut rows = Vec::new();
    for (grid_pos, &value) in config.bandwidths.iter().enumerate() {
        let s = resolve_bandwidth(config, value, &points)?;
        // Methods without a kernel do not depend on s and run once.
        let methods: Vec<Method> = config
            .methods
            .iter()
            .copied()
            .filter(|m| grid_pos == 0 || m.uses_kernel())
            .collect();
        if methods.is_empty() {
            continue;
        }
        for &m in &config.m_grid {
            let r = match config.features {
                Auto::Value(r) => r,
                Auto::Auto => 4 * m,
            };
            let cell = |bandwidth| CellSpec {
                m,
                bandwidth,
                features: r,
                k: config.k,
                seed: config.seed,
                outlier_threshold: config.outlier_threshold,
                refresh_kernel: config.refresh_kernel,
            };
            let started = Instant::now();
            let mut s = s;
            let mut shrinks = 0;
            let ctx = loop {
                let ctx = MethodContext::prepare(&points, &methods, cell(s));
                let short = matches!(&ctx, Ok(c) if matches!(c.kernel_error(), Some(DppcError::RankDeficient { .. })));
                if !(short && value == Auto::Auto && shrinks < MAX_BANDWIDTH_SHRINKS) {
                    break ctx;
                }
                shrinks += 1;
                s *= BANDWIDTH_SHRINK;
            };
            if shrinks > 0 {
                log::info!("bandwidth lowered to {s} for m = {m} to reach the needed kernel rank");
            }
            let setup_ms = started.elapsed().as_secs_f64() * 1e3;
            for &method in &methods {
                let started = Instant::now();
                let result = ctx
                    .as_ref()
                    .map_err(|e| DppcError::Config(e.to_string()))
                    .and_then(|ctx| run_cell(&points, method, ctx, config, truth.as_deref()));
                let elapsed = started.elapsed().as_secs_f64() * 1e3 + setup_ms;
                let (success_rate, ari) = match result {
                    Ok((rate, ari)) => (Some(rate), ari),
                    Err(e) => {
                        log::warn!("method {method} failed at m = {m}, s = {s}: {e}");
                        (None, None)
                    }
                };
                let kernel = method.uses_kernel();
                let row = ResultRow {
                    method,
                    m,
                    s: kernel.then_some(s),
                    r: kernel.then_some(r),
                    seed: config.seed,
                    epsilon: config.epsilon,
                    estimator: config.estimator.name(),
                    success_rate,
                    ari,
                    wall_ms: config.timing.then_some(elapsed),
                };
                writeln!(out, "{}", row.to_csv_line())?;
                out.flush()?;
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            dataset: DatasetSpec::Gaussian { n: 120, d: 2, q: 0.0 },
            methods: vec![Method::Mdpp, Method::MatchedIid, Method::UniformIid, Method::SensitivityIid],
            m_grid: vec![10, 20],
            trials: 6,
            theta_draws: 5,
            timing: false,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn rows_are_deterministic() {
        let mut a = Vec::new();
        let mut b = Vec::new();
        let rows = run_experiment(&small(), &mut a).unwrap();
        run_experiment(&small(), &mut b).unwrap();
        assert_eq!(a, b);
        assert_eq!(rows.len(), 8);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with(CSV_HEADER));
        assert!(rows.iter().all(|r| r.success_rate.is_some() && r.ari.is_none()));
    }

    #[test]
    fn thread_count_does_not_matter() {
        let mut one = small();
        one.threads = Some(1);
        let mut three = small();
        three.threads = Some(3);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        run_experiment(&one, &mut a).unwrap();
        run_experiment(&three, &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn failing_cell_leaves_empty_fields() {
        let mut c = small();
        c.features = Auto::Value(2);
        c.methods = vec![Method::Mdpp, Method::UniformIid];
        let mut out = Vec::new();
        let rows = run_experiment(&c, &mut out).unwrap();
        assert!(rows[0].success_rate.is_none());
        assert!(rows[1].success_rate.is_some());
        let line = String::from_utf8(out).unwrap().lines().nth(1).unwrap().to_string();
        assert!(line.ends_with(",,,"), "{line}");
    }

    #[test]
    fn bandwidth_grid_repeats_kernel_methods_only() {
        let mut c = small();
        c.bandwidths = vec![Auto::Value(0.8), Auto::Value(2.2)];
        c.methods = vec![Method::Mdpp, Method::UniformIid];
        c.m_grid = vec![10];
        let rows = run_experiment(&c, &mut Vec::new()).unwrap();
        let s: Vec<Option<f64>> = rows.iter().map(|r| r.s).collect();
        assert_eq!(s, vec![Some(0.8), None, Some(2.2)]);
    }

    #[test]
    fn auto_bandwidth_shrinks_to_reach_rank() {
        let mut c = small();
        c.dataset = DatasetSpec::Gaussian { n: 400, d: 2, q: 0.0 };
        c.methods = vec![Method::Mdpp];
        c.m_grid = vec![10, 90];
        let rows = run_experiment(&c, &mut Vec::new()).unwrap();
        assert!(rows.iter().all(|r| r.success_rate.is_some()));
        assert!(rows[1].s.unwrap() < rows[0].s.unwrap());

        let mut fixed = c.clone();
        fixed.bandwidths = vec![Auto::Value(rows[0].s.unwrap())];
        let rows = run_experiment(&fixed, &mut Vec::new()).unwrap();
        assert!(rows[0].success_rate.is_some());
        assert!(rows[1].success_rate.is_none());
    }

    #[test]
    fn sbm_rows_carry_ari() {
        let c = ExperimentConfig {
            dataset: DatasetSpec::Sbm {
                n: 200,
                blocks: 2,
                zeta_factor: 0.25,
                degree: 16.0,
            },
            methods: vec![Method::UniformIid, Method::D2],
            estimator: crate::coreset::EstimatorKind::Voronoi,
            m_grid: vec![30],
            trials: 4,
            theta_draws: 3,
            k: 2,
            timing: false,
            ..ExperimentConfig::default()
        };
        let rows = run_experiment(&c, &mut Vec::new()).unwrap();
        for r in rows {
            let ari = r.ari.unwrap();
            assert!(ari > 0.5, "{ari}");
        }
    }
}
