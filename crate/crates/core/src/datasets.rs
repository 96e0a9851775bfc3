//! Synthetic generators and CSV ingestion.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{DppcError, Result};
use crate::points::PointSet;
use crate::rff::sym_eig;

pub const OUTLIER_SHELL: (f64, f64) = (8.0, 12.0);

/// Number of outliers for a fraction `q` of `n` points.
pub fn outlier_count(n: usize, q: f64) -> usize {
    (q * n as f64 + 1e-9).floor() as usize
}

/// Standard isotropic Gaussian points followed by `floor(qN)` outliers drawn
/// uniformly (by volume) in the shell `8 <= |x| <= 12`. Label 1 marks outliers.
pub fn gaussian_with_outliers<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    q: f64,
    rng: &mut R,
) -> Result<PointSet> {
    if !(0.0..1.0).contains(&q) {
        return Err(DppcError::param(format!("outlier fraction {q} outside [0, 1)")));
    }
    if n == 0 || d == 0 {
        return Err(DppcError::param("need n >= 1 and d >= 1"));
    }
    let n_out = outlier_count(n, q);
    let n_in = n - n_out;
    let mut data: Vec<f64> = (0..n_in * d).map(|_| StandardNormal.sample(rng)).collect();
    let (lo, hi) = OUTLIER_SHELL;
    let inner = (lo / hi).powi(d as i32);
    for _ in 0..n_out {
        let dir: Vec<f64> = loop {
            let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break g.into_iter().map(|v| v / norm).collect();
            }
        };
        let u: f64 = rng.random();
        let radius = hi * (inner + u * (1.0 - inner)).powf(1.0 / d as f64);
        data.extend(dir.iter().map(|v| v * radius));
    }
    let labels = (0..n).map(|i| usize::from(i >= n_in)).collect();
    PointSet::new(data, n, d)?.with_labels(labels)
}

/// Stochastic block model parameterized by the inter/intra ratio and the mean degree.
#[derive(Debug, Clone, PartialEq)]
pub struct SbmSpec {
    pub block_sizes: Vec<usize>,
    /// `q2 / q1`.
    pub zeta: f64,
    pub avg_degree: f64,
}

impl SbmSpec {
    pub fn balanced(n: usize, k: usize, zeta: f64, avg_degree: f64) -> Result<Self> {
        if k == 0 || !n.is_multiple_of(k) {
            return Err(DppcError::param(format!("{n} points do not split into {k} equal blocks")));
        }
        Ok(Self {
            block_sizes: vec![n / k; k],
            zeta,
            avg_degree,
        })
    }

    pub fn n(&self) -> usize {
        self.block_sizes.iter().sum()
    }

    /// `(q1, q2)` from `c = q1 (N/k - 1) + q2 (N - N/k)`.
    pub fn probabilities(&self) -> Result<(f64, f64)> {
        let k = self.block_sizes.len();
        if k == 0 || self.block_sizes.contains(&0) {
            return Err(DppcError::param("block sizes must be positive"));
        }
        if !(0.0..=1.0).contains(&self.zeta) {
            return Err(DppcError::param(format!("zeta {} outside [0, 1]", self.zeta)));
        }
        if !(self.avg_degree > 0.0) {
            return Err(DppcError::param("average degree must be positive"));
        }
        let n = self.n() as f64;
        let nb = n / k as f64;
        let denom = (nb - 1.0) + self.zeta * (n - nb);
        if !(denom > 0.0) {
            return Err(DppcError::param("blocks too small for the requested degree"));
        }
        let q1 = self.avg_degree / denom;
        let q2 = self.zeta * q1;
        if q1 > 1.0 {
            return Err(DppcError::param(format!(
                "infeasible edge probability q1 = {q1}; lower the degree or raise N"
            )));
        }
        Ok((q1, q2))
    }
}

/// Detectability threshold `(c - sqrt c) / (c + sqrt c (k - 1))`.
pub fn sbm_critical_zeta(c: f64, k: usize) -> Result<f64> {
    if !(c > 1.0) {
        return Err(DppcError::param(format!("mean degree {c} must exceed 1")));
    }
    if k == 0 {
        return Err(DppcError::param("k must be positive"));
    }
    if k == 1 {
        log::warn!("critical zeta with a single block is degenerate");
    }
    let r = c.sqrt();
    Ok((c - r) / (c + r * (k as f64 - 1.0)))
}

/// Undirected simple graph with ground-truth block labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub adjacency: Vec<Vec<usize>>,
    pub labels: Vec<usize>,
}

impl Graph {
    pub fn n(&self) -> usize {
        self.adjacency.len()
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        2.0 * self.edge_count() as f64 / self.n() as f64
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].binary_search(&j).is_ok()
    }

    /// Same graph with vertex `i` renamed `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(DppcError::param("not a permutation"));
        }
        let mut adjacency = vec![Vec::new(); n];
        let mut labels = vec![0; n];
        for i in 0..n {
            adjacency[perm[i]] = self.adjacency[i].iter().map(|&j| perm[j]).collect();
            adjacency[perm[i]].sort_unstable();
            labels[perm[i]] = self.labels[i];
        }
        Ok(Self { adjacency, labels })
    }
}

pub fn sbm_graph<R: Rng + ?Sized>(spec: &SbmSpec, rng: &mut R) -> Result<Graph> {
    let (q1, q2) = spec.probabilities()?;
    let labels: Vec<usize> = spec
        .block_sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
        .collect();
    let n = labels.len();
    let mut adjacency = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            let q = if labels[i] == labels[j] { q1 } else { q2 };
            if rng.random::<f64>() < q {
                adjacency[i].push(j);
                adjacency[j].push(i);
            }
        }
    }
    Ok(Graph { adjacency, labels })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IsolatedPolicy {
    #[default]
    Reject,
    Drop,
}

/// Row-normalized spectral embedding and the vertices it covers.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    pub features: PointSet,
    pub vertices: Vec<usize>,
}

/// Rows of the `k` eigenvectors of `I - D^-1/2 W D^-1/2` with smallest
/// eigenvalues, each row scaled to unit norm. Labels follow the graph.
pub fn spectral_features(graph: &Graph, k: usize, policy: IsolatedPolicy) -> Result<SpectralEmbedding> {
    let isolated: Vec<usize> = (0..graph.n()).filter(|&i| graph.degree(i) == 0).collect();
    if !isolated.is_empty() && policy == IsolatedPolicy::Reject {
        return Err(DppcError::DegenerateData(format!(
            "{} isolated vertices (first: {})",
            isolated.len(),
            isolated[0]
        )));
    }
    let vertices: Vec<usize> = (0..graph.n()).filter(|&i| graph.degree(i) > 0).collect();
    let n = vertices.len();
    if k == 0 || k > n {
        return Err(DppcError::param(format!("need 1 <= k <= {n}, got {k}")));
    }
    let mut position = vec![usize::MAX; graph.n()];
    for (p, &v) in vertices.iter().enumerate() {
        position[v] = p;
    }
    let inv_sqrt: Vec<f64> = vertices.iter().map(|&v| 1.0 / (graph.degree(v) as f64).sqrt()).collect();
    let mut lap = DMatrix::<f64>::identity(n, n);
    for (a, &v) in vertices.iter().enumerate() {
        for &w in &graph.adjacency[v] {
            let b = position[w];
            lap[(a, b)] -= inv_sqrt[a] * inv_sqrt[b];
        }
    }
    let eig = sym_eig(&lap)?;
    let mut data = Vec::with_capacity(n * k);
    for (a, vertex) in vertices.iter().enumerate() {
        let row: Vec<f64> = (0..k).map(|c| eig.vectors[(a, c)]).collect();
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(DppcError::NumericalDegeneracy(format!(
                "vertex {vertex} has a zero spectral embedding"
            )));
        }
        data.extend(row.iter().map(|v| v / norm));
    }
    let labels = vertices.iter().map(|&v| graph.labels[v]).collect();
    let features = PointSet::new(data, n, k)?.with_labels(labels)?;
    Ok(SpectralEmbedding { features, vertices })
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CsvOptions {
    /// First line is a header.
    pub header: bool,
    /// Last column holds integer labels.
    pub labels: bool,
}

pub fn load_csv(path: &Path, options: CsvOptions) -> Result<PointSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(options.header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error)?;
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(DppcError::Parse {
                row: line,
                column: record.len().min(expected) + 1,
                message: format!("expected {expected} fields, found {}", record.len()),
            });
        }
        let numeric = if options.labels { expected - 1 } else { expected };
        if numeric == 0 {
            return Err(DppcError::Parse {
                row: line,
                column: 1,
                message: "no coordinate columns".into(),
            });
        }
        for (c, field) in record.iter().enumerate() {
            if c < numeric {
                let v: f64 = field.parse().map_err(|e| DppcError::Parse {
                    row: line,
                    column: c + 1,
                    message: format!("'{field}': {e}"),
                })?;
                if !v.is_finite() {
                    return Err(DppcError::Parse {
                        row: line,
                        column: c + 1,
                        message: format!("non-finite value '{field}'"),
                    });
                }
                data.push(v);
            } else {
                labels.push(field.parse::<usize>().map_err(|e| DppcError::Parse {
                    row: line,
                    column: c + 1,
                    message: format!("label '{field}': {e}"),
                })?);
            }
        }
        rows += 1;
    }
    let Some(width) = width else {
        return Err(DppcError::Parse {
            row: 0,
            column: 0,
            message: format!("{} contains no data rows", path.display()),
        });
    };
    let d = if options.labels { width - 1 } else { width };
    let points = PointSet::new(data, rows, d)?;
    if options.labels {
        points.with_labels(labels)
    } else {
        Ok(points)
    }
}

fn csv_error(e: csv::Error) -> DppcError {
    let row = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => DppcError::Io(io),
        other => DppcError::Parse {
            row,
            column: 0,
            message: format!("{other:?}"),
        },
    }
}

/// Writes one point per row with full round-trip precision.
pub fn save_csv(path: &Path, points: &PointSet, options: CsvOptions) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    let write_labels = options.labels && points.labels().is_some();
    if options.header {
        let mut cols: Vec<String> = (0..points.dim()).map(|j| format!("x{j}")).collect();
        if write_labels {
            cols.push("label".into());
        }
        writeln!(out, "{}", cols.join(","))?;
    }
    for (i, x) in points.iter().enumerate() {
        let mut fields: Vec<String> = x.iter().map(|v| format!("{v:?}")).collect();
        if write_labels {
            fields.push(points.labels().unwrap()[i].to_string());
        }
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn outlier_counts() {
        let mut rng = seeded(1);
        let x = gaussian_with_outliers(1000, 2, 0.01, &mut rng).unwrap();
        let labels = x.labels().unwrap();
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 10);
        let clean = gaussian_with_outliers(100, 3, 0.0, &mut rng).unwrap();
        assert!(clean.labels().unwrap().iter().all(|&l| l == 0));
        for (p, &l) in x.iter().zip(labels) {
            if l == 1 {
                let r = p.iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((8.0..=12.0).contains(&r));
            }
        }
        assert!(gaussian_with_outliers(10, 2, 1.0, &mut rng).is_err());
    }

    #[test]
    fn generator_is_reproducible() {
        let a = gaussian_with_outliers(50, 2, 0.1, &mut seeded(4)).unwrap();
        let b = gaussian_with_outliers(50, 2, 0.1, &mut seeded(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn critical_zeta() {
        assert_eq!(sbm_critical_zeta(16.0, 2).unwrap(), 0.6);
        assert!((sbm_critical_zeta(16.0, 10).unwrap() - 3.0 / 13.0).abs() < 1e-15);
        assert!((sbm_critical_zeta(16.0, 1).unwrap() - 0.75).abs() < 1e-15);
        assert!(sbm_critical_zeta(1.0, 2).is_err());
    }

    #[test]
    fn sbm_structure() {
        let mut rng = seeded(2);
        let spec = SbmSpec::balanced(200, 2, 0.0, 8.0).unwrap();
        let g = sbm_graph(&spec, &mut rng).unwrap();
        for i in 0..g.n() {
            assert!(!g.has_edge(i, i));
            for &j in &g.adjacency[i] {
                assert!(g.has_edge(j, i));
                assert_eq!(g.labels[i], g.labels[j]);
            }
        }
        let dense = SbmSpec::balanced(10, 2, 0.5, 100.0).unwrap();
        assert!(dense.probabilities().is_err());
    }

    #[test]
    fn disconnected_components_separate() {
        // two triangles
        let adjacency = vec![vec![1, 2], vec![0, 2], vec![0, 1], vec![4, 5], vec![3, 5], vec![3, 4]];
        let g = Graph {
            adjacency,
            labels: vec![0, 0, 0, 1, 1, 1],
        };
        let emb = spectral_features(&g, 2, IsolatedPolicy::Reject).unwrap();
        let f = &emb.features;
        for i in 0..6 {
            assert!((f.point(i).iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-10);
        }
        let dist = |a: usize, b: usize| crate::points::sq_dist(f.point(a), f.point(b));
        assert!(dist(0, 1) < 1e-12 && dist(3, 5) < 1e-12);
        assert!(dist(0, 3) > 1.0);
    }

    #[test]
    fn isolated_vertices() {
        let g = Graph {
            adjacency: vec![vec![1], vec![0], vec![]],
            labels: vec![0, 0, 1],
        };
        assert!(spectral_features(&g, 1, IsolatedPolicy::Reject).is_err());
        let emb = spectral_features(&g, 1, IsolatedPolicy::Drop).unwrap();
        assert_eq!(emb.vertices, vec![0, 1]);
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.csv");
        std::fs::write(&path, "0,0\n1,1\n").unwrap();
        let x = load_csv(&path, CsvOptions::default()).unwrap();
        assert_eq!((x.len(), x.dim()), (2, 2));

        std::fs::write(&path, "").unwrap();
        assert!(load_csv(&path, CsvOptions::default()).is_err());

        std::fs::write(&path, "1,2\n3\n").unwrap();
        assert!(matches!(
            load_csv(&path, CsvOptions::default()),
            Err(DppcError::Parse { row: 2, .. })
        ));
        std::fs::write(&path, "a,b\n1,2\n3,x\n").unwrap();
        let opts = CsvOptions { header: true, labels: false };
        assert!(matches!(
            load_csv(&path, opts),
            Err(DppcError::Parse { row: 3, column: 2, .. })
        ));

        let mut rng = seeded(3);
        let y = gaussian_with_outliers(40, 3, 0.1, &mut rng).unwrap();
        let opts = CsvOptions { header: true, labels: true };
        save_csv(&path, &y, opts).unwrap();
        assert_eq!(load_csv(&path, opts).unwrap(), y);
        assert!(matches!(
            load_csv(&dir.path().join("missing.csv"), opts),
            Err(DppcError::Io(_))
        ));
    }
}
