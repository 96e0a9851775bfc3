#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use dppc::bounds::{
    corollary_conditions, kmeans_covering_number_log, thm2_mu_star, thm3_m_star, BoundInputs, ProcessKind,
};
use dppc::datasets::{
    gaussian_with_outliers, load_csv, save_csv, sbm_critical_zeta, sbm_graph, spectral_features, CsvOptions,
    IsolatedPolicy, SbmSpec,
};
use dppc::dpp::{dpp_marginals, mdpp_marginals, sample_dpp, sample_mdpp, WeightedSample};
use dppc::experiment::{build_rff_kernel, run_experiment, ConfigBuilder};
use dppc::geometry::min_enclosing_diameter;
use dppc::kmeans::{d2_seeding, weighted_lloyd, LloydInit, LloydOptions};
use dppc::rff::default_bandwidth;
use dppc::rng::{derive_seed, seeded};
use dppc::sensitivity::{bicriteria_sensitivity_bound, one_means_sensitivity};
use dppc::validation::run_oracle_suites;
use dppc::{DppcError, PointSet, Result};

#[derive(Parser)]
#[command(name = "dppc", version, about = "DPP coresets for k-means")]
struct Cli {
    /// Worker threads for trial fan-out.
    #[arg(long, global = true, env = "DPPC_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Draw one weighted sample and print `index,weight,pi`.
    Sample(SampleArgs),
    /// Evaluate the sample-size bounds on a dataset.
    Bounds(BoundsArgs),
    /// Run a sweep of methods over an m grid and print result rows.
    Experiment(ExperimentArgs),
    /// Write a synthetic dataset as CSV.
    Datagen(DatagenArgs),
    /// Check the samplers against brute-force enumeration.
    Validate(ValidateArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Input CSV, one point per row.
    #[arg(long)]
    input: PathBuf,
    /// Skip the first line of the CSV.
    #[arg(long)]
    header: bool,
    /// Treat the last CSV column as an integer label.
    #[arg(long)]
    labels: bool,
}

impl InputArgs {
    fn load(&self) -> Result<PointSet> {
        load_csv(
            &self.input,
            CsvOptions {
                header: self.header,
                labels: self.labels,
            },
        )
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Process {
    Dpp,
    Mdpp,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "mdpp")]
    process: Process,
    /// Sample size (m-DPP only).
    #[arg(short, long, default_value_t = 20)]
    m: usize,
    /// Kernel bandwidth; mean interdistance when omitted.
    #[arg(short, long)]
    s: Option<f64>,
    /// Number of random Fourier frequencies; 4m when omitted.
    #[arg(short, long)]
    r: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "mdpp")]
    process: Process,
    #[arg(short, long, default_value_t = 20)]
    m: usize,
    #[arg(short, long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(short, long)]
    s: Option<f64>,
    #[arg(short, long)]
    r: Option<usize>,
    /// Log of the covering number; computed from the data when omitted.
    #[arg(long)]
    log_n: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Config file of `key = value` lines.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides, applied after the named flags.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    methods: Option<String>,
    /// Comma-separated m grid.
    #[arg(short, long)]
    m: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    theta_draws: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Bandwidth grid, numbers or `auto`.
    #[arg(short, long)]
    s: Option<String>,
    #[arg(short, long)]
    r: Option<String>,
    #[arg(long)]
    estimator: Option<String>,
    #[arg(short, long)]
    k: Option<String>,
    /// Leave wall_ms empty so identical seeds give identical files.
    #[arg(long)]
    no_timing: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Gaussian,
    Sbm,
}

#[derive(Args)]
struct DatagenArgs {
    #[arg(value_enum)]
    generator: Generator,
    #[arg(short, long, default_value_t = 1000)]
    n: usize,
    #[arg(short, long, default_value_t = 2)]
    d: usize,
    /// Outlier fraction.
    #[arg(short, long, default_value_t = 0.0)]
    q: f64,
    #[arg(long, default_value_t = 2)]
    blocks: usize,
    /// Fraction of the critical zeta.
    #[arg(long, default_value_t = 0.25)]
    zeta_factor: f64,
    #[arg(long, default_value_t = 16.0)]
    degree: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Append the ground-truth label as the last column.
    #[arg(long)]
    labels: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 200_000)]
    draws: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write + Send>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout()),
    })
}

fn bandwidth(points: &PointSet, s: Option<f64>, seed: u64) -> Result<f64> {
    match s {
        Some(s) => Ok(s),
        None => default_bandwidth(points, &mut seeded(derive_seed(seed, 1))),
    }
}

fn sample(args: &SampleArgs) -> Result<()> {
    let points = args.input.load()?;
    let s = bandwidth(&points, args.s, args.seed)?;
    let r = args.r.unwrap_or(4 * args.m.max(1));
    let mut rng = seeded(args.seed);
    let view = build_rff_kernel(&points, s, r, &mut rng)?;
    let sample: WeightedSample = match args.process {
        Process::Dpp => sample_dpp(&view, &mut rng)?,
        Process::Mdpp => sample_mdpp(&view, args.m, &mut rng)?,
    };
    let mut out = output(&args.output)?;
    writeln!(out, "index,weight,pi")?;
    for ((i, w), p) in sample.indices.iter().zip(&sample.weights).zip(&sample.inclusion_probs) {
        writeln!(out, "{i},{w},{p}")?;
    }
    out.flush()?;
    Ok(())
}

fn bounds(args: &BoundsArgs) -> Result<()> {
    let points = args.input.load()?;
    let mut rng = seeded(args.seed);
    let s = bandwidth(&points, args.s, args.seed)?;
    let r = args.r.unwrap_or(4 * args.m.max(1));
    let view = build_rff_kernel(&points, s, r, &mut rng)?;
    let (pi, kind) = match args.process {
        Process::Dpp => (dpp_marginals(&view), ProcessKind::Dpp),
        Process::Mdpp => (mdpp_marginals(&view, args.m)?, ProcessKind::MDpp),
    };
    if pi.iter().any(|p| !(*p > 0.0)) {
        return Err(DppcError::NumericalDegeneracy(
            "some inclusion probabilities vanish; raise r or s".into(),
        ));
    }
    let sigma = if args.k == 1 {
        one_means_sensitivity(&points)?
    } else {
        bicriteria_sensitivity_bound(&points, args.k, &mut rng)?.0
    };
    let log_n = match args.log_n {
        Some(v) => v,
        None => {
            let init = d2_seeding(&points, args.k, &mut rng)?;
            let fit = weighted_lloyd(&points, None, args.k, LloydInit::Indices(init), LloydOptions::default())?;
            let mean_cost = fit.cost / points.len() as f64;
            if !(mean_cost > 0.0) {
                return Err(DppcError::DegenerateData("optimal k-means cost is zero".into()));
            }
            kmeans_covering_number_log(min_enclosing_diameter(&points), args.epsilon, mean_cost, args.k, points.dim())?
        }
    };
    let inputs = BoundInputs {
        sigma: sigma.sigma.clone(),
        pi: pi.clone(),
        mu: pi.iter().sum(),
        epsilon: args.epsilon,
        delta: args.delta,
        log_n,
    };
    let mu = thm2_mu_star(&inputs)?;
    let m_star = thm3_m_star(&inputs)?;
    let cor = corollary_conditions(&sigma.sigma, &pi, args.epsilon, args.delta, log_n, sigma.total, kind)?;
    let mut out = io::stdout().lock();
    writeln!(out, "quantity,value")?;
    for (name, value) in [
        ("bandwidth", s),
        ("features", r as f64),
        ("expected_size", inputs.mu),
        ("total_sensitivity", sigma.total),
        ("log_covering", log_n),
        ("max_ratio", inputs.max_ratio()),
        ("mu1", mu.mu1),
        ("mu2", mu.mu2),
        ("mu_star", mu.mu_star),
        ("m_star", m_star),
        ("alpha", cor.alpha),
        ("beta", cor.beta),
        ("requirement", cor.requirement),
        ("implied_bound", cor.implied_bound),
    ] {
        writeln!(out, "{name},{value}")?;
    }
    writeln!(out, "min_sensitivity_condition,{}", mu.lemma_holds)?;
    writeln!(out, "corollary_satisfied,{}", cor.satisfied)?;
    writeln!(out, "corollary_admissible,{}", cor.admissible)?;
    Ok(())
}

fn experiment(args: &ExperimentArgs, threads: Option<usize>) -> Result<()> {
    let mut builder = match &args.config {
        Some(path) => ConfigBuilder::from_file(path)?,
        None => ConfigBuilder::new(),
    };
    let named = [
        ("dataset", &args.dataset),
        ("methods", &args.methods),
        ("m", &args.m),
        ("epsilon", &args.epsilon),
        ("trials", &args.trials),
        ("theta_draws", &args.theta_draws),
        ("seed", &args.seed),
        ("s", &args.s),
        ("r", &args.r),
        ("estimator", &args.estimator),
        ("k", &args.k),
    ];
    for (key, value) in named {
        if let Some(v) = value {
            builder.set(key, v)?;
        }
    }
    for pair in &args.overrides {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| DppcError::Config(format!("expected KEY=VALUE, got '{pair}'")))?;
        builder.set(key.trim(), value.trim())?;
    }
    if args.no_timing {
        builder.set("timing", "false")?;
    }
    let mut config = builder.build()?;
    if config.threads.is_none() {
        config.threads = threads;
    }
    let mut out = output(&args.output)?;
    run_experiment(&config, &mut out)?;
    Ok(())
}

fn datagen(args: &DatagenArgs) -> Result<()> {
    let mut rng = seeded(args.seed);
    let points = match args.generator {
        Generator::Gaussian => gaussian_with_outliers(args.n, args.d, args.q, &mut rng)?,
        Generator::Sbm => {
            let zeta = args.zeta_factor * sbm_critical_zeta(args.degree, args.blocks)?;
            let spec = SbmSpec::balanced(args.n, args.blocks, zeta.min(1.0), args.degree)?;
            let graph = sbm_graph(&spec, &mut rng)?;
            spectral_features(&graph, args.blocks, IsolatedPolicy::Drop)?.features
        }
    };
    save_csv(
        Path::new(&args.output),
        &points,
        CsvOptions {
            header: false,
            labels: args.labels,
        },
    )
}

fn validate(args: &ValidateArgs) -> Result<bool> {
    let reports = run_oracle_suites(args.seed, args.draws)?;
    let mut all = true;
    for r in &reports {
        let verdict = if r.passed() { "pass" } else { "FAIL" };
        println!("{verdict} {} {:.3e} (tolerance {:.1e})", r.name, r.statistic, r.tolerance);
        all &= r.passed();
    }
    Ok(all)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    let result = match &cli.command {
        Command::Sample(a) => sample(a),
        Command::Bounds(a) => bounds(a),
        Command::Experiment(a) => experiment(a, cli.threads),
        Command::Datagen(a) => datagen(a),
        Command::Validate(a) => validate(a).and_then(|ok| {
            if ok {
                Ok(())
            } else {
                Err(DppcError::NumericalDegeneracy("oracle suites failed".into()))
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
