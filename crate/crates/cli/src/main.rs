//! `pinned-osb`: solve exercise boundaries, estimate volatility, run the
//! simulation studies and evaluate strategies on option data bundles.
//!
//! Every run writes `manifest.json` into its `--out` directory, also when
//! the run fails. Exit codes: 0 success, 1 runtime failure, 2 usage error.

mod manifest;

use std::error::Error;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use pinned_osb::boundary::{call_boundary_from_put, solve_boundary};
use pinned_osb::bridge::sample_path;
use pinned_osb::inference::{confidence_curves, coverage_experiment, mle_sigma, CoverageConfig};
use pinned_osb::market_data::{
    aggregate_profit, evaluate_profits, summarize, write_aggregates_csv, write_relative_csv,
    write_summary_csv, Bundle, ProfitConfig, Strategy,
};
use pinned_osb::simulation::{run_payoff_study, ExperimentConfig};
use pinned_osb::{Boundary, BridgeSpec, PricePath, Side, SolverConfig, TimeGrid};

use manifest::Manifest;

type CmdResult = Result<(), Box<dyn Error + Send + Sync>>;

#[derive(Parser)]
#[command(
    name = "pinned-osb",
    version,
    about = "American options on a pinned Brownian bridge"
)]
struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true, env = "PINNED_OSB_WORKERS")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the optimal exercise boundary.
    Solve(SolveArgs),
    /// Estimate σ from an observed path and build confidence curves.
    Infer(InferArgs),
    /// Run the coverage or payoff simulation study from a JSON config.
    Study(StudyArgs),
    /// Evaluate exercise strategies on an option data bundle.
    Data(DataArgs),
    /// Sample one bridge path.
    Sample(SampleArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum GridKind {
    Log,
    Uniform,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SideArg {
    Put,
    Call,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum StudyKind {
    Coverage,
    Payoff,
}

#[derive(Args, Serialize)]
struct SolveArgs {
    #[arg(long)]
    strike: f64,
    #[arg(long)]
    horizon: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = SolverConfig::DEFAULT_NODES)]
    nodes: usize,
    #[arg(long, default_value_t = SolverConfig::DEFAULT_DELTA)]
    delta: f64,
    #[arg(long, default_value_t = SolverConfig::DEFAULT_MAX_ITERATIONS)]
    max_iterations: usize,
    #[arg(long, value_enum, default_value_t = GridKind::Log)]
    grid: GridKind,
    #[arg(long, value_enum, default_value_t = SideArg::Put)]
    side: SideArg,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct InferArgs {
    /// Observed `t,x` CSV.
    #[arg(long)]
    path: PathBuf,
    #[arg(long)]
    strike: f64,
    #[arg(long)]
    horizon: f64,
    /// Fraction of the observed increments used by the estimator.
    #[arg(long, default_value_t = 1.0)]
    use_fraction: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-2)]
    fd_step: f64,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value_t = SolverConfig::DEFAULT_NODES)]
    nodes: usize,
    #[arg(long, default_value_t = SolverConfig::DEFAULT_DELTA)]
    delta: f64,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct StudyArgs {
    #[arg(long, value_enum)]
    kind: StudyKind,
    #[arg(long)]
    config: PathBuf,
    /// Overrides the replication count of the config.
    #[arg(long)]
    replications: Option<usize>,
    /// Overrides the seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct DataArgs {
    /// Bundle directory.
    #[arg(long)]
    bundle: PathBuf,
    /// `NAME=bridge` or `NAME=FILE` with a `t,b` boundary on normalised
    /// coordinates. Repeatable.
    #[arg(long = "strategy", default_value = "bridge=bridge")]
    strategies: Vec<String>,
    /// Pinning-deviance thresholds.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.005,0.01,0.02,0.05,0.1,0.2,1"
    )]
    thresholds: Vec<f64>,
    /// `A,B`: also write the relative profit (A − B)/B.
    #[arg(long, value_delimiter = ',')]
    compare: Option<Vec<String>>,
    /// History fractions.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"
    )]
    rhos: Vec<f64>,
    #[arg(long, default_value_t = SolverConfig::DEFAULT_NODES)]
    nodes: usize,
    #[arg(long, default_value_t = SolverConfig::DEFAULT_DELTA)]
    delta: f64,
    #[arg(long, default_value_t = 365.0)]
    days_per_year: f64,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct SampleArgs {
    #[arg(long)]
    strike: f64,
    #[arg(long)]
    horizon: f64,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    x0: f64,
    /// Number of equal steps over `[0, horizon]`.
    #[arg(long)]
    steps: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, out) = match &cli.command {
        Command::Solve(a) => ("solve", a.out.clone()),
        Command::Infer(a) => ("infer", a.out.clone()),
        Command::Study(a) => ("study", a.out.clone()),
        Command::Data(a) => ("data", a.out.clone()),
        Command::Sample(a) => ("sample", a.out.clone()),
    };
    if let Err(e) = fs::create_dir_all(&out) {
        eprintln!("error: cannot create {}: {e}", out.display());
        return ExitCode::from(1);
    }
    let mut manifest = Manifest::new(name);
    let result = run(&cli, &out, &mut manifest);
    if let Err(e) = &result {
        manifest.fail(e.to_string());
    }
    if let Err(e) = manifest.write(&out) {
        eprintln!("error: cannot write manifest: {e}");
        return ExitCode::from(1);
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli, out: &Path, manifest: &mut Manifest) -> CmdResult {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err("--workers must be >= 1".into());
        }
        pool = pool.num_threads(w);
    }
    let pool = pool.build()?;
    pool.install(|| match &cli.command {
        Command::Solve(a) => solve(a, out, manifest),
        Command::Infer(a) => infer(a, out, manifest),
        Command::Study(a) => study(a, out, manifest),
        Command::Data(a) => data(a, out, manifest),
        Command::Sample(a) => sample(a, out, manifest),
    })
}

fn grid_for(kind: GridKind, nodes: usize, horizon: f64) -> pinned_osb::Result<TimeGrid> {
    match kind {
        GridKind::Log => TimeGrid::logarithmic(nodes, horizon),
        GridKind::Uniform => TimeGrid::uniform(nodes, horizon),
    }
}

fn write_json(
    manifest: &mut Manifest,
    out: &Path,
    name: &str,
    value: &serde_json::Value,
) -> CmdResult {
    let mut f = manifest.create(out, name)?;
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    f.flush()?;
    Ok(())
}

fn solve(a: &SolveArgs, out: &Path, manifest: &mut Manifest) -> CmdResult {
    manifest.config(serde_json::to_value(a)?);
    let spec = BridgeSpec::new(a.strike, a.horizon, a.sigma, a.lambda)?;
    let cfg = SolverConfig::new(
        grid_for(a.grid, a.nodes, a.horizon)?,
        a.delta,
        a.max_iterations,
    )?;
    let put = solve_boundary(&spec, &cfg)?;
    let boundary = match a.side {
        SideArg::Put => put,
        SideArg::Call => call_boundary_from_put(&put)?,
    };
    boundary.write_csv(manifest.create(out, "boundary.csv")?)?;
    write_json(manifest, out, "boundary.json", &boundary.to_json())?;
    println!("b(0) = {}", boundary.values()[0]);
    Ok(())
}

fn infer(a: &InferArgs, out: &Path, manifest: &mut Manifest) -> CmdResult {
    manifest.config(serde_json::to_value(a)?);
    manifest.input(&a.path);
    if !(a.use_fraction > 0.0 && a.use_fraction <= 1.0) {
        return Err(format!("--use-fraction must lie in (0, 1], got {}", a.use_fraction).into());
    }
    let path = PricePath::load(&a.path)?;
    // The pinned terminal observation carries no information about σ.
    let tol = 1e-12 * a.horizon;
    let before_end = path
        .times()
        .iter()
        .take_while(|&&t| t < a.horizon - tol)
        .count();
    let requested = (a.use_fraction * path.last_index() as f64).floor() as usize;
    let n = requested.min(before_end.saturating_sub(1));
    if n == 0 {
        return Err("no usable increments before the horizon".into());
    }
    let est = mle_sigma(&path, n, a.strike, a.horizon)?;
    if est.is_degenerate() {
        return Err(pinned_osb::Error::DegenerateEstimate(format!(
            "sigma_hat = 0 from {n} increments: the path has no deviation from the bridge mean"
        ))
        .into());
    }
    println!("sigma_hat = {}", est.sigma_hat);
    println!("n = {}", est.n);
    println!("fisher = {}", est.fisher);
    let spec = BridgeSpec::new(a.strike, a.horizon, est.sigma_hat, a.lambda)?;
    let cfg = SolverConfig::new(
        TimeGrid::logarithmic(a.nodes, a.horizon)?,
        a.delta,
        SolverConfig::DEFAULT_MAX_ITERATIONS,
    )?;
    let band = confidence_curves(&est, &spec, &cfg, a.alpha, a.fd_step)?;
    band.write_csv(manifest.create(out, "band.csv")?)?;
    let doc = json!({ "sigma_hat": est.sigma_hat, "n": est.n, "fisher": est.fisher });
    write_json(manifest, out, "estimate.json", &doc)
}

fn study(a: &StudyArgs, out: &Path, manifest: &mut Manifest) -> CmdResult {
    manifest.input(&a.config);
    let text = fs::read_to_string(&a.config).map_err(|e| format!("{}: {e}", a.config.display()))?;
    match a.kind {
        StudyKind::Coverage => {
            let mut cfg: CoverageConfig = serde_json::from_str(&text)
                .map_err(|e| format!("invalid coverage config {}: {e}", a.config.display()))?;
            if let Some(m) = a.replications {
                cfg.replications = m;
            }
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            manifest.config(json!({ "kind": "coverage", "study": cfg }));
            manifest.seed(cfg.seed);
            let res = coverage_experiment(&cfg)?;
            res.write_csv(manifest.create(out, "coverage.csv")?)?;
            let doc = json!({
                "replications": res.replications,
                "failures": res.failures,
                "reference": [res.reference.0, res.reference.1],
            });
            write_json(manifest, out, "coverage.json", &doc)
        }
        StudyKind::Payoff => {
            let mut cfg: ExperimentConfig = serde_json::from_str(&text)
                .map_err(|e| format!("invalid payoff config {}: {e}", a.config.display()))?;
            if let Some(m) = a.replications {
                cfg.replications = m;
            }
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            manifest.config(json!({ "kind": "payoff", "study": cfg }));
            manifest.seed(cfg.seed);
            let table = run_payoff_study(&cfg)?;
            table.write_csv(manifest.create(out, "payoff.csv")?)?;
            Ok(())
        }
    }
}

fn parse_strategy(
    spec: &str,
    manifest: &mut Manifest,
) -> Result<(String, Strategy), Box<dyn Error + Send + Sync>> {
    let (name, source) = spec
        .split_once('=')
        .ok_or_else(|| format!("--strategy `{spec}`: expected NAME=bridge or NAME=FILE"))?;
    if name.is_empty() {
        return Err(format!("--strategy `{spec}`: empty name").into());
    }
    if source == "bridge" {
        return Ok((name.to_string(), Strategy::Bridge));
    }
    manifest.input(source);
    let file = fs::File::open(source).map_err(|e| format!("{source}: {e}"))?;
    let unit = BridgeSpec::new(1.0, 1.0, 1.0, 0.0)?;
    let boundary =
        Boundary::read_csv(file, unit, Side::Put).map_err(|e| format!("{source}: {e}"))?;
    Ok((name.to_string(), Strategy::Fixed(boundary)))
}

fn data(a: &DataArgs, out: &Path, manifest: &mut Manifest) -> CmdResult {
    manifest.config(serde_json::to_value(a)?);
    let mut strategies = Vec::new();
    for s in &a.strategies {
        strategies.push(parse_strategy(s, manifest)?);
    }
    let mut names: Vec<&str> = strategies.iter().map(|(n, _)| n.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err("strategy names must be distinct".into());
    }
    if let Some(pair) = &a.compare {
        if pair.len() != 2 {
            return Err("--compare takes exactly two strategy names, A,B".into());
        }
        for n in pair {
            if !names.contains(&n.as_str()) {
                return Err(format!("--compare: unknown strategy `{n}`").into());
            }
        }
    }
    let bundle = Bundle::load(&a.bundle)?;
    manifest.input(a.bundle.join("meta.csv"));
    for o in &bundle.options {
        manifest.input(a.bundle.join(format!("path_{}.csv", o.id)));
        manifest.input(a.bundle.join(format!("oi_{}.csv", o.id)));
    }
    if bundle.rates.is_some() {
        manifest.input(a.bundle.join("rates.csv"));
    }
    let cfg = ProfitConfig {
        rhos: a.rhos.clone(),
        nodes: a.nodes,
        delta: a.delta,
        days_per_year: a.days_per_year,
    };
    write_summary_csv(
        &summarize(&bundle.options)?,
        manifest.create(out, "options.csv")?,
    )?;
    let eval = evaluate_profits(&bundle, &strategies, &cfg)?;
    {
        let mut f = manifest.create(out, "profits.csv")?;
        writeln!(f, "option,rho,strategy,deviance,profit")?;
        for r in &eval.records {
            writeln!(
                f,
                "{},{},{},{},{}",
                r.option, r.rho, r.strategy, r.deviance, r.profit
            )?;
        }
        f.flush()?;
    }
    {
        let mut f = manifest.create(out, "skipped.csv")?;
        writeln!(f, "option,rho,reason")?;
        for s in &eval.skipped {
            writeln!(
                f,
                "{},{},\"{}\"",
                s.option,
                s.rho,
                s.reason.replace('"', "'")
            )?;
        }
        f.flush()?;
    }
    if eval.records.is_empty() {
        return Err("no split could be evaluated; see skipped.csv".into());
    }
    let aggregates = a
        .thresholds
        .iter()
        .map(|&p| aggregate_profit(&eval.records, p))
        .collect::<pinned_osb::Result<Vec<_>>>()?;
    write_aggregates_csv(&aggregates, manifest.create(out, "aggregate.csv")?)?;
    if let Some(pair) = &a.compare {
        write_relative_csv(
            &aggregates,
            &pair[0],
            &pair[1],
            manifest.create(out, "relative.csv")?,
        )?;
    }
    println!(
        "{} options, {} profit records, {} skipped splits",
        bundle.options.len(),
        eval.records.len(),
        eval.skipped.len()
    );
    Ok(())
}

fn sample(a: &SampleArgs, out: &Path, manifest: &mut Manifest) -> CmdResult {
    manifest.config(serde_json::to_value(a)?);
    manifest.seed(a.seed);
    if a.steps < 1 {
        return Err("--steps must be >= 1".into());
    }
    let spec = BridgeSpec::new(a.strike, a.horizon, a.sigma, 0.0)?;
    let times: Vec<f64> = (0..=a.steps)
        .map(|k| a.horizon * k as f64 / a.steps as f64)
        .collect();
    let path = sample_path(&spec, a.x0, &times, a.seed)?;
    path.write_csv(manifest.create(out, "path.csv")?)?;
    Ok(())
}
