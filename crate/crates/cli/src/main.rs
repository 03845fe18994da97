//! `ssate`: estimate treatment effects from CSV files, evaluate efficiency
//! bounds for synthetic DGPs, and run Monte Carlo studies.
//!
//! Every command prints (or writes with `--output`) a JSON envelope tagged
//! `"schema": "ssate/v1"` that echoes the resolved configuration. Exit codes:
//! 0 success, 2 invalid input or usage, 3 estimation failure, 4 incomplete
//! simulation report.

mod config;

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use ssate_core::csvio::{read_one_sample, read_two_sample};
use ssate_core::estimators::{estimate_os, estimate_ts_eff, Method};
use ssate_core::nuisance::RieszMode;
use ssate_core::oracle::compute_bounds;
use ssate_core::sim::{run_infinite_unlabeled_study, run_mc, McReport};

use config::{
    dgp_arg, hook_arg, simulate_config, to_value, BoundsConfig, EstimateOsConfig, EstimateTsConfig,
    Layers, Study,
};

pub const SCHEMA: &str = "ssate/v1";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(ssate_core::Error),
    Incomplete(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_validation() => 2,
            CliError::Core(ssate_core::Error::ReportIncomplete { .. }) => 4,
            CliError::Core(_) => 3,
            CliError::Incomplete(_) => 4,
        }
    }
}

impl From<ssate_core::Error> for CliError {
    fn from(e: ssate_core::Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Parser)]
#[command(
    name = "ssate",
    version,
    about = "Semi-supervised ATE estimation with unlabeled covariates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its keys
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Write the JSON report here instead of stdout
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct NuisanceFlags {
    /// Polynomial basis degree
    #[arg(long)]
    degree: Option<usize>,
    /// Ridge penalty for outcome regressions
    #[arg(long)]
    lambda: Option<f64>,
    /// Probability clipping bound
    #[arg(long)]
    clip_eps: Option<f64>,
    /// Weight estimation: mle-g, ls-riesz or kl-riesz
    #[arg(long)]
    riesz_mode: Option<RieszMode>,
}

impl NuisanceFlags {
    fn apply(&self, l: &mut Layers) {
        l.set("nuisance.basis.degree", self.degree.map(|v| json!(v)));
        l.set("nuisance.ridge_lambda", self.lambda.map(|v| json!(v)));
        l.set("nuisance.clip_eps", self.clip_eps.map(|v| json!(v)));
        l.set("nuisance.riesz_mode", self.riesz_mode.map(|v| to_value(&v)));
    }
}

#[derive(Args)]
struct FitFlags {
    /// Number of cross-fitting folds
    #[arg(long)]
    folds: Option<usize>,
    /// Seed for the fold assignment
    #[arg(long)]
    seed: Option<u64>,
    /// Confidence level
    #[arg(long)]
    level: Option<f64>,
}

impl FitFlags {
    fn apply(&self, l: &mut Layers, seed_key: &str) {
        l.set("folds", self.folds.map(|v| json!(v)));
        l.set(seed_key, self.seed.map(|v| json!(v)));
        l.set("level", self.level.map(|v| json!(v)));
    }
}

#[derive(Args)]
struct DgpFlags {
    /// DGP spec: inline JSON or a path to a JSON file
    #[arg(long, conflicts_with = "dgp_preset")]
    dgp: Option<String>,
    /// Built-in DGP: d1 or d2
    #[arg(long)]
    dgp_preset: Option<String>,
}

impl DgpFlags {
    fn apply(&self, l: &mut Layers) -> Result<(), CliError> {
        if let Some(d) = &self.dgp {
            l.take("dgp_preset");
            l.set("dgp", Some(dgp_arg(d)?));
        }
        if let Some(p) = &self.dgp_preset {
            l.take("dgp");
            l.set("dgp_preset", Some(json!(p)));
        }
        Ok(())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the ATE from a one-sample CSV (x1..xk,o,d,y)
    EstimateOs {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
        /// OS-eff, OS-IPW or OS-RA
        #[arg(long)]
        method: Option<Method>,
        #[command(flatten)]
        nuisance: NuisanceFlags,
        #[command(flatten)]
        fit: FitFlags,
    },
    /// Estimate the ATE from a labeled CSV (x1..xk,d,y) and an unlabeled CSV (x1..xk)
    EstimateTs {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "FILE")]
        labeled: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        unlabeled: Option<PathBuf>,
        /// Mixture weight of the target covariate law, in [0, 1]
        #[arg(long)]
        beta_star: Option<f64>,
        #[command(flatten)]
        nuisance: NuisanceFlags,
        #[command(flatten)]
        fit: FitFlags,
    },
    /// Closed-form efficiency bounds for a DGP spec
    Bounds {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dgp: DgpFlags,
        /// Labeled fraction m / (m + l) for two-sample specs
        #[arg(long)]
        alpha: Option<f64>,
        /// Grid step of the beta search
        #[arg(long)]
        grid_step: Option<f64>,
    },
    /// Run a replicated Monte Carlo study
    Simulate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dgp: DgpFlags,
        #[arg(long)]
        method: Option<Method>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        l: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        beta_star: Option<f64>,
        /// none, zero_mu, true_weights, oracle, or JSON such as {"constant_g":0.3}
        #[arg(long)]
        hook: Option<String>,
        /// mc or infinite_unlabeled
        #[arg(long)]
        study: Option<String>,
        /// Unlabeled-to-labeled multiple for the infinite_unlabeled study
        #[arg(long)]
        ratio: Option<f64>,
        #[command(flatten)]
        nuisance: NuisanceFlags,
        #[command(flatten)]
        fit: FitFlags,
        /// Worker threads (default: available cores); output does not depend on it
        #[arg(long, env = "SSATE_THREADS")]
        threads: Option<usize>,
        /// Also write per-replication estimates as CSV
        #[arg(long, value_name = "FILE")]
        per_rep_csv: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    schema: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a C,
    seed: Option<u64>,
    report: &'a R,
}

fn emit<C: Serialize, R: Serialize>(
    output: Option<&Path>,
    command: &str,
    config: &C,
    seed: Option<u64>,
    report: &R,
) -> Result<(), CliError> {
    let env = Envelope {
        schema: SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        seed,
        report,
    };
    let mut text = serde_json::to_string_pretty(&env).expect("reports serialize to JSON");
    text.push('\n');
    let io = |e: std::io::Error| CliError::Core(e.into());
    match output {
        Some(p) => std::fs::write(p, text).map_err(io),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(io),
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))
}

fn estimate_os_cmd(
    common: Common,
    input: Option<PathBuf>,
    method: Option<Method>,
    nuisance: NuisanceFlags,
    fit: FitFlags,
) -> Result<(), CliError> {
    let mut l = Layers::from_file(common.config.as_deref())?;
    l.set("input", input.map(|p| to_value(&p)));
    l.set("method", method.map(|m| to_value(&m)));
    nuisance.apply(&mut l);
    fit.apply(&mut l, "seed");
    let cfg: EstimateOsConfig = l.into_typed()?;
    let data = read_one_sample(open(&cfg.input)?)?;
    let report = estimate_os(
        &data,
        cfg.method,
        cfg.folds,
        cfg.seed,
        &cfg.nuisance,
        cfg.level,
    )?;
    emit(
        common.output.as_deref(),
        "estimate-os",
        &cfg,
        Some(cfg.seed),
        &report,
    )
}

fn estimate_ts_cmd(
    common: Common,
    labeled: Option<PathBuf>,
    unlabeled: Option<PathBuf>,
    beta_star: Option<f64>,
    nuisance: NuisanceFlags,
    fit: FitFlags,
) -> Result<(), CliError> {
    let mut l = Layers::from_file(common.config.as_deref())?;
    l.set("labeled", labeled.map(|p| to_value(&p)));
    l.set("unlabeled", unlabeled.map(|p| to_value(&p)));
    l.set("beta_star", beta_star.map(|b| json!(b)));
    nuisance.apply(&mut l);
    fit.apply(&mut l, "seed");
    let cfg: EstimateTsConfig = l.into_typed()?;
    let Some(beta) = cfg.beta_star else {
        return Err(CliError::Usage(
            "estimate-ts requires --beta-star <BETA> (or \"beta_star\" in the config file)\n\n\
             Usage: ssate estimate-ts --labeled <FILE> --unlabeled <FILE> --beta-star <BETA>"
                .into(),
        ));
    };
    let data = read_two_sample(open(&cfg.labeled)?, open(&cfg.unlabeled)?)?;
    let report = estimate_ts_eff(&data, beta, cfg.folds, cfg.seed, &cfg.nuisance, cfg.level)?;
    emit(
        common.output.as_deref(),
        "estimate-ts",
        &cfg,
        Some(cfg.seed),
        &report,
    )
}

fn bounds_cmd(
    common: Common,
    dgp: DgpFlags,
    alpha: Option<f64>,
    grid_step: Option<f64>,
) -> Result<(), CliError> {
    let mut l = Layers::from_file(common.config.as_deref())?;
    dgp.apply(&mut l)?;
    l.resolve_preset()?;
    l.set("alpha", alpha.map(|v| json!(v)));
    l.set("grid_step", grid_step.map(|v| json!(v)));
    let cfg: BoundsConfig = l.into_typed()?;
    let report = compute_bounds(&cfg.dgp, cfg.alpha, cfg.grid_step)?;
    emit(common.output.as_deref(), "bounds", &cfg, None, &report)
}

fn write_per_rep(path: &Path, report: &McReport) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Core(ssate_core::Error::Io(e.to_string()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in &report.records {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::Core(e.into()))
}

#[allow(clippy::too_many_arguments)]
fn simulate_cmd(
    common: Common,
    dgp: DgpFlags,
    scalars: [(&str, Option<Value>); 8],
    hook: Option<String>,
    nuisance: NuisanceFlags,
    fit: FitFlags,
    threads: Option<usize>,
    per_rep_csv: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut l = Layers::from_file(common.config.as_deref())?;
    dgp.apply(&mut l)?;
    for (key, v) in scalars {
        l.set(key, v);
    }
    l.set("hook", hook.as_deref().map(hook_arg).transpose()?);
    nuisance.apply(&mut l);
    fit.apply(&mut l, "base_seed");
    let cfg = simulate_config(l)?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads.filter(|&t| t > 0) {
        pool = pool.num_threads(t);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))?;
    let report = pool.install(|| match cfg.study {
        Study::Mc => run_mc(&cfg.mc),
        Study::InfiniteUnlabeled => {
            run_infinite_unlabeled_study(&cfg.mc, cfg.ratio.expect("checked when parsed"))
        }
    })?;

    emit(
        common.output.as_deref(),
        "simulate",
        &cfg,
        Some(cfg.mc.base_seed),
        &report,
    )?;
    if let Some(p) = per_rep_csv {
        write_per_rep(&p, &report)?;
    }
    if !report.complete {
        return Err(CliError::Incomplete(format!(
            "report incomplete: {} of {} replications failed",
            report.failures.len(),
            report.reps_requested
        )));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::EstimateOs {
            common,
            input,
            method,
            nuisance,
            fit,
        } => estimate_os_cmd(common, input, method, nuisance, fit),
        Command::EstimateTs {
            common,
            labeled,
            unlabeled,
            beta_star,
            nuisance,
            fit,
        } => estimate_ts_cmd(common, labeled, unlabeled, beta_star, nuisance, fit),
        Command::Bounds {
            common,
            dgp,
            alpha,
            grid_step,
        } => bounds_cmd(common, dgp, alpha, grid_step),
        Command::Simulate {
            common,
            dgp,
            method,
            n,
            m,
            l,
            reps,
            beta_star,
            hook,
            study,
            ratio,
            nuisance,
            fit,
            threads,
            per_rep_csv,
        } => simulate_cmd(
            common,
            dgp,
            [
                ("method", method.map(|v| to_value(&v))),
                ("n", n.map(|v| json!(v))),
                ("m", m.map(|v| json!(v))),
                ("l", l.map(|v| json!(v))),
                ("reps", reps.map(|v| json!(v))),
                ("beta_star", beta_star.map(|v| json!(v))),
                ("study", study.map(|v| json!(v))),
                ("ratio", ratio.map(|v| json!(v))),
            ],
            hook,
            nuisance,
            fit,
            threads,
            per_rep_csv,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = match &e {
                CliError::Usage(m) | CliError::Incomplete(m) => m.clone(),
                CliError::Core(err) => err.to_string(),
            };
            eprintln!("error: {msg}");
            ExitCode::from(e.exit_code())
        }
    }
}
