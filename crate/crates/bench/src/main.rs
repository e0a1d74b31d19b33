use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fbe_bench::config::{BenchConfig, SolverEntry, SolverKind};
use fbe_bench::{check, report, runner};
use fbe_core::instance::{self, DEFAULT_DCT_F, DEFAULT_SIGMA};
use fbe_core::{Family, Instance, InstanceSpec};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "fbe-bench", version, about = "Seeded l1-l2 least-squares benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write instance files (binary plus JSON sidecar).
    Gen(GenArgs),
    /// Solve one instance with one solver and print a JSON report.
    Solve(SolveArgs),
    /// Run the full matrix of a config and write CSV and Markdown tables.
    Bench(BenchArgs),
    /// Run the invariant suites.
    Check(CheckArgs),
}

#[derive(Args, Clone)]
struct SpecArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    family: FamilyArg,
    #[arg(long, default_value_t = 720)]
    m: usize,
    #[arg(long, default_value_t = 2560)]
    n: usize,
    #[arg(long, default_value_t = 160)]
    s: usize,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    sigma: f64,
    #[arg(long = "dct-f", default_value_t = DEFAULT_DCT_F)]
    f: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum FamilyArg {
    Gaussian,
    Dct,
}

impl SpecArgs {
    fn spec(&self) -> InstanceSpec {
        let family = match self.family {
            FamilyArg::Gaussian => Family::GaussianUnitColumns,
            FamilyArg::Dct => Family::OversampledDct,
        };
        InstanceSpec { family, m: self.m, n: self.n, s: self.s, sigma: self.sigma, f: self.f, seed: self.seed }
    }
}

#[derive(Args)]
struct GenArgs {
    /// Generate every (group, seed) of a bench config instead of one spec.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    spec: SpecArgs,
    /// Output file, or directory when `--config` is given.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file written by `gen`; otherwise one is generated from the spec flags.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, value_enum, default_value = "fbe-lbfgs")]
    solver: SolverArg,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, default_value_t = fbe_bench::config::DEFAULT_GAMMA_FACTOR)]
    gamma_factor: f64,
    #[arg(long, default_value_t = fbe_bench::config::DEFAULT_MU)]
    mu: f64,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::ValueEnum, Clone, Copy)]
enum SolverArg {
    FbeLbfgs,
    Npg,
    NpgMajor,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    /// Replace every group's seeds with this one.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace every solver's tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Replace every solver's gamma factor.
    #[arg(long)]
    gamma_factor: Option<f64>,
    /// Directory for `results.csv` and `results.md`; overrides the config's paths.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    spec: &'a InstanceSpec,
    solver: &'a str,
    lambda_max: f64,
    t_lambda_max: f64,
    report: &'a fbe_core::RunReport,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Gen(args) => gen(args),
        Command::Solve(args) => solve(args),
        Command::Bench(args) => bench(args),
        Command::Check(args) => run_check(args),
    }
}

fn gen(args: GenArgs) -> Result<()> {
    let specs: Vec<InstanceSpec> = match &args.config {
        Some(path) => {
            let config = BenchConfig::load(path)?;
            config.instances.iter().flat_map(|g| g.seeds().into_iter().map(move |s| g.spec(s))).collect()
        }
        None => vec![args.spec.spec()],
    };
    if args.config.is_some() {
        fs::create_dir_all(&args.out)?;
    }
    for spec in specs {
        for w in spec.warnings() {
            log::warn!("{w}");
        }
        let inst = instance::generate(&spec)?;
        let path = if args.config.is_some() {
            args.out.join(instance_file_name(&spec))
        } else {
            args.out.clone()
        };
        inst.save(&path).with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
    }
    Ok(())
}

fn instance_file_name(spec: &InstanceSpec) -> String {
    let family = match spec.family {
        Family::GaussianUnitColumns => "gaussian",
        Family::OversampledDct => "dct",
    };
    format!("{family}_m{}_n{}_s{}_seed{}.bin", spec.m, spec.n, spec.s, spec.seed)
}

fn solve(args: SolveArgs) -> Result<()> {
    let inst = match &args.instance {
        Some(path) => Instance::load(path)?,
        None => instance::generate(&args.spec.spec())?,
    };
    let kind = match args.solver {
        SolverArg::FbeLbfgs => SolverKind::FbeLbfgs,
        SolverArg::Npg => SolverKind::Npg,
        SolverArg::NpgMajor => SolverKind::NpgMajor,
    };
    let entry = SolverEntry { kind, tol: args.tol, gamma_factor: args.gamma_factor, label: None };
    if !(entry.gamma_factor > 0.0 && entry.gamma_factor < 1.0) {
        bail!("gamma factor must lie in (0, 1), got {}", entry.gamma_factor);
    }
    let dc = runner::problem_for(&inst, args.mu, args.mu)?;
    let (lambda_max, t_lambda_max) = runner::timed_lambda_max(&dc)?;
    let max_iter = args.max_iter.unwrap_or(fbe_core::solvers::DEFAULT_MAX_ITER);
    let report = runner::run_solver(&dc, lambda_max, &entry, max_iter)?;
    let label = entry.label();
    let out = SolveOutput { spec: &inst.spec, solver: &label, lambda_max, t_lambda_max, report: &report };
    let json = serde_json::to_string_pretty(&out)?;
    match args.out {
        Some(path) => fs::write(path, json)?,
        None => println!("{json}"),
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let mut config = BenchConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config = config.with_seed(seed);
    }
    if let Some(tol) = args.tol {
        config = config.with_tol(tol);
    }
    if let Some(g) = args.gamma_factor {
        config = config.with_gamma_factor(g);
    }
    config.validate()?;
    if config.solvers.is_empty() {
        log::warn!("no solvers configured; the tables will be empty");
    }
    let rows = runner::run_benchmark(&config)?;
    let (csv_path, md_path) = match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            (Some(dir.join("results.csv")), Some(dir.join("results.md")))
        }
        None => (config.outputs.csv.clone(), config.outputs.markdown.clone()),
    };
    match csv_path {
        Some(p) => report::write_csv(&rows, create(&p)?)?,
        None => report::write_csv(&rows, std::io::stdout())?,
    }
    let md = report::markdown(&rows);
    match md_path {
        Some(p) => fs::write(&p, md).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{md}"),
    }
    for r in rows.iter().filter(|r| r.error.is_some()) {
        log::warn!("{} seed {}: {}", r.solver, r.seed, r.error.as_deref().unwrap_or_default());
    }
    Ok(())
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn run_check(args: CheckArgs) -> Result<()> {
    let outcomes = check::run_checks(args.seed);
    for c in &outcomes {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if let Some(p) = args.out {
        fs::write(p, serde_json::to_string_pretty(&outcomes)?)?;
    }
    if outcomes.iter().any(|c| !c.passed) {
        bail!("invariant checks failed");
    }
    Ok(())
}
