//! `driftsets`: Monte Carlo experiments and one-shot prediction sets.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use driftsets_core::data::{load_airfoil, load_csv, CsvSchema};
use driftsets_core::drp::{fit, CdfSpec, DrpConfig, NuisanceSpec, PropensitySpec, Variant};
use driftsets_core::sim::{
    run_conditional, run_mc, run_real, run_sensitivity, write_csv, write_summary, CondConfig, DgpSpec, McResult,
    Method, MnarGaussian, SensConfig, METHOD_NAMES,
};
use driftsets_core::{Error, ScoreSpec, Seed};

use output::{json_line, set_json, write_commented_csv};

#[derive(Debug, Parser)]
#[command(name = "driftsets", version, about = "Prediction sets for a shifted, unlabeled target population")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Every flag of the invoked subcommand; embedded in each output file.
#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Monte Carlo coverage and width on a simulated shift.
    Simulate(SimulateArgs),
    /// Coverage on a real dataset with simulated missing outcomes.
    Real(RealArgs),
    /// Fit on a CSV and print sets for query covariates as JSON lines.
    Predict(PredictArgs),
    /// Thresholds and coverage across assumed outcome shifts.
    Sensitivity(SensitivityArgs),
    /// Coverage at fixed test points.
    Conditional(ConditionalArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Dgp {
    KangSchafer,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum VariantArg {
    Split2,
    Split3,
    Full,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Split2 => Variant::Split2,
            VariantArg::Split3 => Variant::Split3,
            VariantArg::Full => Variant::Full,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ScoreArg {
    Ridge,
    Cqr,
}

#[derive(Debug, clap::Args, Serialize)]
struct SimulateArgs {
    #[arg(long, value_enum, default_value = "kang-schafer")]
    dgp: Dgp,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 500)]
    runs: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, value_delimiter = ',', default_value = "full,split3,split2,wcp,efcp")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fresh target draws per run.
    #[arg(long, default_value_t = 1000)]
    test_size: usize,
    /// Widths are capped here before averaging.
    #[arg(long, default_value_t = 10.0)]
    w_trunc: f64,
    #[arg(long, default_value = "driftsets-out")]
    out: PathBuf,
}

#[derive(Debug, clap::Args, Serialize)]
struct RealArgs {
    /// Airfoil self-noise file: five features and the response per line.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 500)]
    runs: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, value_delimiter = ',', default_value = "full,split3,split2,wcp")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50.0)]
    w_trunc: f64,
    #[arg(long, default_value = "driftsets-out")]
    out: PathBuf,
}

#[derive(Debug, clap::Args, Serialize)]
struct PredictArgs {
    /// Training CSV with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Covariate columns.
    #[arg(long, value_delimiter = ',', required = true)]
    x: Vec<String>,
    /// Outcome column; empty or NA marks a target unit.
    #[arg(long)]
    y: String,
    /// Optional population column, 1 for target units.
    #[arg(long)]
    t: Option<String>,
    /// CSV holding the covariate columns of the query points.
    #[arg(long)]
    query: PathBuf,
    #[arg(long, value_enum, default_value = "split2")]
    variant: VariantArg,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "ridge")]
    score: ScoreArg,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Use this constant propensity odds instead of a logistic fit.
    #[arg(long)]
    pi: Option<f64>,
    /// Use this constant conditional score CDF instead of a fitted one.
    #[arg(long)]
    m: Option<f64>,
    #[arg(long, default_value_t = 0.99)]
    clip: f64,
    #[arg(long, default_value_t = 50)]
    grid_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, clap::Args, Serialize)]
struct SensitivityArgs {
    /// True mean shift of target outcomes in the simulation.
    #[arg(long, default_value_t = 1.0)]
    shift: f64,
    /// Assumed shifts to analyze.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0,0.25,0.5,0.75,1")]
    scales: Vec<f64>,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 1000)]
    test_size: usize,
    #[arg(long, default_value_t = 10.0)]
    w_trunc: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination; records are always printed as JSON lines.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args, Serialize)]
struct ConditionalArgs {
    #[arg(long, value_delimiter = ',', default_value = "split3,wcp")]
    methods: Vec<String>,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long, default_value_t = 100)]
    draws: usize,
    #[arg(long, default_value_t = 100)]
    fits: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    #[arg(long, default_value_t = 10.0)]
    w_trunc: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "conditional.csv")]
    out: PathBuf,
}

/// Bad flag values that clap cannot see, such as unknown method names.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn methods(names: &[String], alpha: f64, w_max: f64) -> anyhow::Result<Vec<Method>> {
    if names.is_empty() {
        return Err(UsageError(format!("no methods given; valid names: {}", METHOD_NAMES.join(", "))).into());
    }
    names
        .iter()
        .map(|n| Method::from_name(n.trim(), alpha, w_max).map_err(|e| UsageError(e.to_string()).into()))
        .collect()
}

fn prepare_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn write_results(dir: &Path, config: &Command, results: &[McResult]) -> anyhow::Result<()> {
    write_csv(dir.join("runs.csv"), config, results).context("writing runs.csv")?;
    write_summary(dir.join("summary.json"), config, results).context("writing summary.json")?;
    for r in results {
        json_line(&serde_json::json!({
            "method": r.method,
            "runs": r.runs,
            "coverage": r.coverage,
            "coverage_se": r.coverage_se,
            "width": r.width,
            "width_se": r.width_se,
            "infinite_fraction": r.infinite_fraction,
        }))?;
    }
    Ok(())
}

fn simulate(a: &SimulateArgs, config: &Command) -> anyhow::Result<()> {
    let ms = methods(&a.methods, a.alpha, a.w_trunc)?;
    let dgp = match a.dgp {
        Dgp::KangSchafer => DgpSpec::kang_schafer(a.n)?,
    };
    prepare_dir(&a.out)?;
    let results = run_mc(&dgp, &ms, a.runs, a.test_size, a.w_trunc, Seed(a.seed))?;
    write_results(&a.out, config, &results)
}

fn real(a: &RealArgs, config: &Command) -> anyhow::Result<()> {
    let ms = methods(&a.methods, a.alpha, a.w_trunc)?;
    let ds = load_airfoil(&a.data).with_context(|| format!("reading {}", a.data.display()))?;
    prepare_dir(&a.out)?;
    let results = run_real(&ds, &ms, a.runs, a.w_trunc, Seed(a.seed))?;
    write_results(&a.out, config, &results)
}

fn predict(a: &PredictArgs) -> anyhow::Result<()> {
    let mut schema = CsvSchema::new(a.x.iter().cloned()).with_y(a.y.clone());
    if let Some(t) = &a.t {
        schema = schema.with_t(t.clone());
    }
    let ds = load_csv(&a.data, &schema).with_context(|| format!("reading {}", a.data.display()))?;
    let query = load_csv(&a.query, &CsvSchema::new(a.x.iter().cloned()))
        .with_context(|| format!("reading {}", a.query.display()))?;

    let score = match a.score {
        ScoreArg::Ridge => ScoreSpec::ridge(a.lambda),
        ScoreArg::Cqr => ScoreSpec::cqr(a.alpha),
    };
    let nuisance = NuisanceSpec {
        propensity: a.pi.map_or(PropensitySpec::Fitted { clip: a.clip }, PropensitySpec::constant),
        cdf: a.m.map_or(CdfSpec::Fitted { grid_size: a.grid_size }, CdfSpec::constant),
    };
    let cfg = DrpConfig::new(a.alpha, a.variant.into(), score).with_nuisance(nuisance);
    let fitted = fit(&ds, &cfg, &mut Seed(a.seed).rng())?;
    for u in query.units() {
        json_line(&set_json(u.x(), &fitted.predict(u.x())))?;
    }
    Ok(())
}

fn sensitivity(a: &SensitivityArgs, config: &Command) -> anyhow::Result<()> {
    let law = MnarGaussian::kang_schafer(a.shift);
    let cfg = SensConfig { n: a.n, alpha: a.alpha, test_size: a.test_size, w_trunc: a.w_trunc };
    let records = run_sensitivity(&law, &a.scales, &cfg, Seed(a.seed))?;
    if let Some(path) = &a.out {
        write_commented_csv(path, config, &records)?;
    }
    for r in &records {
        json_line(&serde_json::json!({
            "label": r.label,
            "scale": r.scale,
            "theta": output::num(r.theta),
            "coverage": r.coverage,
            "width": r.width,
        }))?;
    }
    Ok(())
}

fn conditional(a: &ConditionalArgs, config: &Command) -> anyhow::Result<()> {
    let ms = methods(&a.methods, a.alpha, a.w_trunc)?;
    let cfg = CondConfig { n: a.n, points: a.points, draws: a.draws, fits: a.fits, alpha: a.alpha, w_trunc: a.w_trunc };
    let records = run_conditional(&ms, &cfg, Seed(a.seed))?;
    let rows: Vec<_> = records
        .iter()
        .map(|r| output::CondRow {
            method: &r.method,
            x1: r.x[0],
            x2: r.x[1],
            x3: r.x[2],
            x4: r.x[3],
            norm: r.norm,
            coverage: r.coverage,
            width: r.width,
        })
        .collect();
    write_commented_csv(&a.out, config, &rows)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("DRIFTSETS_THREADS") {
        let n: usize = v.parse().map_err(|_| UsageError(format!("DRIFTSETS_THREADS must be a positive integer, got `{v}`")))?;
        if n == 0 {
            bail!(UsageError("DRIFTSETS_THREADS must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let config = &cli.command;
    match config {
        Command::Simulate(a) => simulate(a, config),
        Command::Real(a) => real(a, config),
        Command::Predict(a) => predict(a),
        Command::Sensitivity(a) => sensitivity(a, config),
        Command::Conditional(a) => conditional(a, config),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.downcast_ref::<UsageError>().is_some()
                || matches!(e.downcast_ref::<Error>(), Some(Error::Config(_)));
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
