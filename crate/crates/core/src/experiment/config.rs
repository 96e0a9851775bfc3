//! Flat `key = value` experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::coreset::EstimatorKind;
use crate::error::{DppcError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Mdpp,
    MatchedIid,
    UniformIid,
    SensitivityIid,
    D2,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Mdpp,
        Method::MatchedIid,
        Method::UniformIid,
        Method::SensitivityIid,
        Method::D2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mdpp => "mdpp",
            Method::MatchedIid => "matched_iid",
            Method::UniformIid => "uniform_iid",
            Method::SensitivityIid => "sensitivity_iid",
            Method::D2 => "d2",
        }
    }

    pub fn supports(self, estimator: EstimatorKind) -> bool {
        !(self == Method::D2 && estimator == EstimatorKind::Importance)
    }

    /// Whether the method depends on the RFF kernel.
    pub fn uses_kernel(self) -> bool {
        matches!(self, Method::Mdpp | Method::MatchedIid)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = DppcError;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| DppcError::Config(format!("unknown method '{s}'")))
    }
}

/// A positive parameter or `auto`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Auto<T> {
    Auto,
    Value(T),
}

impl<T: FromStr> FromStr for Auto<T> {
    type Err = DppcError;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(Auto::Auto);
        }
        s.parse()
            .map(Auto::Value)
            .map_err(|_| DppcError::Config(format!("expected a number or 'auto', got '{s}'")))
    }
}

impl<T: fmt::Display> fmt::Display for Auto<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Auto::Auto => f.write_str("auto"),
            Auto::Value(v) => v.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Gaussian {
        n: usize,
        d: usize,
        q: f64,
    },
    /// Spectral features of a balanced SBM with `blocks` communities and
    /// `zeta = zeta_factor * zeta_c`.
    Sbm {
        n: usize,
        blocks: usize,
        zeta_factor: f64,
        degree: f64,
    },
    Csv {
        path: PathBuf,
        header: bool,
        labels: bool,
    },
}

impl DatasetSpec {
    /// Whether the labels are class labels usable for ARI.
    pub fn has_ground_truth(&self) -> bool {
        match self {
            DatasetSpec::Gaussian { .. } => false,
            DatasetSpec::Sbm { .. } => true,
            DatasetSpec::Csv { labels, .. } => *labels,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub methods: Vec<Method>,
    pub m_grid: Vec<usize>,
    pub epsilon: f64,
    pub theta_draws: usize,
    pub trials: usize,
    pub seed: u64,
    /// Bandwidth grid; kernel methods are swept over every value.
    pub bandwidths: Vec<Auto<f64>>,
    pub features: Auto<usize>,
    pub estimator: EstimatorKind,
    pub k: usize,
    /// Record per-cell wall time; off gives byte-identical outputs across runs.
    pub timing: bool,
    /// Outlier threshold `sigma*`; `None` disables the split.
    pub outlier_threshold: Option<f64>,
    /// Draw a fresh RFF kernel for every trial instead of once per `m`.
    pub refresh_kernel: bool,
    /// Lloyd restarts on each sample when computing ARI.
    pub restarts: usize,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSpec::Gaussian {
                n: 1000,
                d: 2,
                q: 0.0,
            },
            methods: vec![
                Method::Mdpp,
                Method::MatchedIid,
                Method::UniformIid,
                Method::SensitivityIid,
            ],
            m_grid: vec![20, 40, 60, 80, 100],
            epsilon: 0.1,
            theta_draws: 50,
            trials: 300,
            seed: 0,
            bandwidths: vec![Auto::Auto],
            features: Auto::Auto,
            estimator: EstimatorKind::Importance,
            k: 1,
            timing: true,
            outlier_threshold: None,
            refresh_kernel: false,
            restarts: 1,
            threads: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| DppcError::Config(format!("invalid value '{value}' for '{key}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(DppcError::Config(format!("invalid boolean '{value}' for '{key}'"))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

/// Raw dataset keys, resolved once all overrides are in.
#[derive(Debug, Clone, Default)]
struct DatasetKeys {
    kind: Option<String>,
    n: Option<usize>,
    d: Option<usize>,
    q: Option<f64>,
    blocks: Option<usize>,
    zeta_factor: Option<f64>,
    degree: Option<f64>,
    path: Option<PathBuf>,
    header: Option<bool>,
    labels: Option<bool>,
}

/// Accumulates `key = value` pairs from a file and then from overrides.
#[derive(Debug, Clone, Default)]
pub struct ConfigBuilder {
    config: ExperimentConfig,
    dataset: DatasetKeys,
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut builder = Self::new();
        builder.apply_text(&text)?;
        Ok(builder)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                DppcError::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let c = &mut self.config;
        let ds = &mut self.dataset;
        match key {
            "dataset" => ds.kind = Some(value.to_string()),
            "n" => ds.n = Some(parse(key, value)?),
            "d" => ds.d = Some(parse(key, value)?),
            "q" => ds.q = Some(parse(key, value)?),
            "blocks" => ds.blocks = Some(parse(key, value)?),
            "zeta_factor" => ds.zeta_factor = Some(parse(key, value)?),
            "degree" => ds.degree = Some(parse(key, value)?),
            "csv_path" => ds.path = Some(PathBuf::from(value)),
            "csv_header" => ds.header = Some(parse_bool(key, value)?),
            "csv_labels" => ds.labels = Some(parse_bool(key, value)?),
            "methods" => {
                c.methods = if value == "all" {
                    Method::ALL.to_vec()
                } else {
                    parse_list(key, value)?
                }
            }
            "m" => c.m_grid = parse_list(key, value)?,
            "epsilon" => c.epsilon = parse(key, value)?,
            "theta_draws" => c.theta_draws = parse(key, value)?,
            "trials" => c.trials = parse(key, value)?,
            "seed" => c.seed = parse(key, value)?,
            "s" => c.bandwidths = parse_list(key, value)?,
            "r" => c.features = value.parse()?,
            "estimator" => c.estimator = value.parse()?,
            "k" => c.k = parse(key, value)?,
            "timing" => c.timing = parse_bool(key, value)?,
            "outlier_threshold" => {
                c.outlier_threshold = if value == "none" {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "refresh_kernel" => c.refresh_kernel = parse_bool(key, value)?,
            "restarts" => c.restarts = parse(key, value)?,
            "threads" => c.threads = Some(parse(key, value)?),
            other => return Err(DppcError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn build(self) -> Result<ExperimentConfig> {
        let mut config = self.config;
        let ds = self.dataset;
        config.dataset = match ds.kind.as_deref().unwrap_or("gaussian") {
            "gaussian" => DatasetSpec::Gaussian {
                n: ds.n.unwrap_or(1000),
                d: ds.d.unwrap_or(2),
                q: ds.q.unwrap_or(0.0),
            },
            "sbm" => DatasetSpec::Sbm {
                n: ds.n.unwrap_or(1000),
                blocks: ds.blocks.unwrap_or(2),
                zeta_factor: ds.zeta_factor.unwrap_or(0.25),
                degree: ds.degree.unwrap_or(16.0),
            },
            "csv" => DatasetSpec::Csv {
                path: ds
                    .path
                    .ok_or_else(|| DppcError::Config("dataset = csv needs csv_path".into()))?,
                header: ds.header.unwrap_or(false),
                labels: ds.labels.unwrap_or(false),
            },
            other => return Err(DppcError::Config(format!("unknown dataset '{other}'"))),
        };
        config.validate()?;
        Ok(config)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(DppcError::Config(msg));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return fail(format!("epsilon {} outside (0, 1)", self.epsilon));
        }
        if self.methods.is_empty() {
            return fail("no methods selected".into());
        }
        if self.m_grid.is_empty() || self.m_grid.contains(&0) || self.m_grid.windows(2).any(|w| w[0] >= w[1]) {
            return fail("m grid must be positive and strictly ascending".into());
        }
        if self.theta_draws == 0 || self.trials == 0 || self.k == 0 || self.restarts == 0 {
            return fail("theta_draws, trials, k and restarts must be positive".into());
        }
        if self.bandwidths.is_empty() {
            return fail("bandwidth grid is empty".into());
        }
        for s in &self.bandwidths {
            if let Auto::Value(s) = *s {
                if !(s > 0.0) {
                    return fail(format!("bandwidth {s} must be positive"));
                }
            }
        }
        if self.features == Auto::Value(0) {
            return fail("r must be positive".into());
        }
        if let Some(t) = self.outlier_threshold {
            if !(t > 0.0 && t <= 1.0) {
                return fail(format!("outlier threshold {t} outside (0, 1]"));
            }
        }
        if self.threads == Some(0) {
            return fail("threads must be positive".into());
        }
        if let Some(m) = self.methods.iter().find(|m| !m.supports(self.estimator)) {
            return fail(format!(
                "method '{m}' has no inclusion probabilities; use estimator = voronoi"
            ));
        }
        match self.dataset {
            DatasetSpec::Gaussian { n, d, q } if n == 0 || d == 0 || !(0.0..1.0).contains(&q) => {
                fail("gaussian dataset needs n, d >= 1 and q in [0, 1)".into())
            }
            DatasetSpec::Sbm {
                n,
                blocks,
                zeta_factor,
                degree,
            } if blocks == 0 || n % blocks != 0 || !(zeta_factor >= 0.0) || !(degree > 1.0) => {
                fail("sbm dataset needs n divisible by blocks, zeta_factor >= 0 and degree > 1".into())
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_overrides() {
        let mut b = ConfigBuilder::new();
        b.apply_text("# comment\nm = 10, 20\nmethods = mdpp,uniform_iid\nseed=3\ns = auto\nr = 50\n")
            .unwrap();
        b.set("seed", "9").unwrap();
        let c = b.build().unwrap();
        assert_eq!(c.m_grid, vec![10, 20]);
        assert_eq!(c.methods, vec![Method::Mdpp, Method::UniformIid]);
        assert_eq!(c.seed, 9);
        assert_eq!(c.bandwidths, vec![Auto::Auto]);
        assert_eq!(c.features, Auto::Value(50));
    }

    #[test]
    fn rejects_bad_values() {
        let mut b = ConfigBuilder::new();
        assert!(b.set("nope", "1").is_err());
        assert!(b.set("m", "x").is_err());
        assert!(b.apply_text("m 10").is_err());
        let mut b = ConfigBuilder::new();
        b.set("methods", "all").unwrap();
        assert!(matches!(b.build(), Err(DppcError::Config(_))));
        let mut b = ConfigBuilder::new();
        b.set("methods", "all").unwrap();
        b.set("estimator", "voronoi").unwrap();
        assert_eq!(b.build().unwrap().methods.len(), 5);
        let mut b = ConfigBuilder::new();
        b.set("m", "20,10").unwrap();
        assert!(b.build().is_err());
        let mut b = ConfigBuilder::new();
        b.set("dataset", "csv").unwrap();
        assert!(b.build().is_err());
    }
}
