//! The `coint-rec` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use coint_rec_core::dgp::{
    build_covariance, make_sparse_beta, simulate_replication, SimulatedSample,
};
use coint_rec_core::lasso::{estimation_errors, fit, FitOptions, LassoProblem};
use coint_rec_core::rec::{default_bickel_m, estimate_rec, ConeProblem, DescentOptions};
use coint_rec_core::theory::{
    default_truncation_exponent, derive_constants, lasso_error_probability, rec_probability_bound,
    Dimensions, LassoProbabilityForm, TheoryConstants,
};
use coint_rec_core::Matrix;
use serde_json::{json, Value};

use crate::config::{self, ExperimentConfig, ExperimentKind, ResolvedConfig};
use crate::error::{AppError, AppResult};
use crate::experiments::{self, RunOptions};
use crate::io;

#[derive(Debug, Parser)]
#[command(
    name = "coint-rec",
    version,
    about = "Restricted eigenvalue and lasso diagnostics for cointegrated regressions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// TOML config file; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for experiments.
    #[arg(long, global = true, env = "COINT_REC_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Override a config key, e.g. `--set lasso.tol=1e-6`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one cointegrated sample at the first grid point.
    Simulate {
        #[arg(long, default_value_t = 0)]
        replication: u64,
    },
    /// Evaluate the theory constants and bounds at the first grid point.
    Constants,
    /// Bracket the restricted eigenvalue of a regressor matrix.
    Rec {
        /// CSV of regressors (or a sample CSV); simulated when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Fit the lasso to a sample.
    Lasso {
        /// Sample CSV with `y` and `x_*` columns; simulated when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Penalty; the configured rule when omitted.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Run a Monte Carlo experiment and write records and a summary.
    Experiment {
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        /// Add wall-clock times to the records.
        #[arg(long)]
        timings: bool,
    },
    /// Run the rate study over the configured horizons.
    Rate {
        #[arg(long)]
        timings: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Rec,
    Lasso,
    Chernoff,
}

impl From<KindArg> for ExperimentKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Rec => ExperimentKind::Rec,
            KindArg::Lasso => ExperimentKind::Lasso,
            KindArg::Chernoff => ExperimentKind::Chernoff,
        }
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}

fn resolve(common: &CommonArgs, extra: &[String]) -> AppResult<ResolvedConfig> {
    let mut overrides = common.overrides.clone();
    overrides.extend_from_slice(extra);
    if let Some(seed) = common.seed {
        overrides.push(format!("master_seed={seed}"));
    }
    config::load(common.config.as_deref(), &overrides)
}

fn workers(common: &CommonArgs) -> usize {
    common
        .workers
        .filter(|w| *w > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn emit(common: &CommonArgs, name: &str, doc: &Value) -> AppResult<()> {
    let bytes = match common.format {
        Some(Format::Csv) => io::flat_csv(doc)?,
        _ => io::to_pretty(doc).into_bytes(),
    };
    match &common.out {
        Some(dir) => {
            let ext = if common.format == Some(Format::Csv) {
                "csv"
            } else {
                "json"
            };
            io::write_file(&dir.join(format!("{name}.{ext}")), &bytes)
        }
        None => {
            print!("{}", String::from_utf8_lossy(&bytes));
            Ok(())
        }
    }
}

fn simulate_first(cfg: &ExperimentConfig, replication: u64) -> AppResult<SimulatedSample> {
    let p = cfg.grid[0];
    let cov = build_covariance(&cfg.covariance.spec(p.n + 1))?;
    let beta = make_sparse_beta(p.n, p.s, cfg.beta.magnitude, cfg.beta.pattern())?;
    let seed = experiments::point_seed(cfg.master_seed, 0);
    Ok(simulate_replication(
        p.t,
        &beta.values,
        &cov,
        seed,
        replication,
    )?)
}

fn constants_for(cfg: &ExperimentConfig, dims: Dimensions, n: usize) -> AppResult<TheoryConstants> {
    let cov = build_covariance(&cfg.covariance.spec(n + 1))?;
    let mut point = cfg.grid[0];
    point.t = dims.t as usize;
    point.n = n;
    Ok(derive_constants(&experiments::theory_inputs(
        cfg, point, &cov,
    ))?)
}

fn execute(cli: &Cli) -> AppResult<()> {
    let common = &cli.common;
    match &cli.command {
        Command::Simulate { replication } => {
            let resolved = resolve(common, &[])?;
            let sample = simulate_first(&resolved.config, *replication)?;
            let bytes = match common.format {
                Some(Format::Json) => {
                    let body = json!({
                        "seed": sample.seed,
                        "replication_id": sample.replication_id,
                        "y": sample.y,
                        "x": (0..sample.horizon()).map(|t| sample.x.row(t).iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
                        "eps_y": sample.eps_y,
                        "beta_true": sample.beta_true,
                        "support": sample.support,
                    });
                    io::to_pretty(&io::document("sample", &resolved, body)).into_bytes()
                }
                _ => io::sample_csv(&resolved, &sample)?,
            };
            match &common.out {
                Some(dir) => {
                    let ext = if common.format == Some(Format::Json) {
                        "json"
                    } else {
                        "csv"
                    };
                    io::write_file(&dir.join(format!("sample.{ext}")), &bytes)
                }
                None => {
                    print!("{}", String::from_utf8_lossy(&bytes));
                    Ok(())
                }
            }
        }
        Command::Constants => {
            let resolved = resolve(common, &[])?;
            let cfg = &resolved.config;
            let p = cfg.grid[0];
            let dims = p.dims();
            let constants = constants_for(cfg, dims, p.n)?;
            let lambda = cfg.lambda_rule.lambda(dims);
            let m = cfg
                .lasso
                .truncation_m
                .unwrap_or_else(|| default_truncation_exponent(cfg.lambda_rule.xi));
            let mut body =
                serde_json::to_value(constants).map_err(|e| AppError::Input(e.to_string()))?;
            body["rec_probability_bound"] = json!(rec_probability_bound(
                dims,
                constants.inputs.c1,
                constants.c2
            )?);
            if lambda > 0.0 {
                let c = &constants;
                body["lambda"] = json!(lambda);
                body["truncation_m"] = json!(m);
                body["lasso_error_probability"] = json!(lasso_error_probability(
                    lambda,
                    dims,
                    c.inputs.cap_sigma,
                    m,
                    c.inputs.c1,
                    c.c2,
                    LassoProbabilityForm::Displayed
                )?);
            }
            if !constants.feasible {
                return Err(AppError::Infeasible {
                    precondition: format!(
                        "s + m_kappa <= N (s = {}, m_kappa = {}, N = {})",
                        p.s, constants.m_kappa, p.n
                    ),
                    detail: body,
                });
            }
            emit(
                common,
                "constants",
                &io::document("constants", &resolved, body),
            )
        }
        Command::Rec { input } => {
            let resolved = resolve(common, &[])?;
            let cfg = &resolved.config;
            let s_matrix: Matrix = match input {
                Some(path) => io::read_table(path)?.regressors(),
                None => simulate_first(cfg, 0)?.x,
            };
            let (t, n) = s_matrix.shape();
            let s = cfg.grid[0].s;
            if s > n || n < 2 {
                return Err(AppError::Input(format!(
                    "need 2 <= N and s <= N; got N = {n}, s = {s}"
                )));
            }
            let dims = Dimensions::from_counts(t, n, s);
            let constants = constants_for(cfg, dims, n)?;
            let problem = ConeProblem::new(&s_matrix, dims.f_t(), s, cfg.constants.c0)?;
            let m = cfg
                .rec
                .m
                .or_else(|| default_bickel_m(s, n, Some(constants.m_kappa)));
            let descent = DescentOptions {
                restarts: cfg.rec.restarts,
                iters: cfg.rec.iters,
                support_budget: cfg.rec.support_budget,
                seed: cfg.master_seed,
            };
            let estimate = estimate_rec(&problem, m, cfg.budget, &descent)?;
            let body = json!({
                "T": t,
                "N": n,
                "s": s,
                "f_T": dims.f_t(),
                "c0": cfg.constants.c0,
                "kappa0": constants.kappa_0,
                "lower_bound_at_least_kappa0": estimate.lower_bound >= constants.kappa_0,
                "estimate": estimate,
            });
            emit(common, "rec", &io::document("rec", &resolved, body))
        }
        Command::Lasso { input, lambda } => {
            let resolved = resolve(common, &[])?;
            let cfg = &resolved.config;
            let (y, x, truth) = match input {
                Some(path) => {
                    let table = io::read_table(path)?;
                    let yi = table
                        .column_index("y")
                        .ok_or_else(|| AppError::Input("input needs a `y` column".into()))?;
                    let y: Vec<f64> = table.data.column(yi).iter().copied().collect();
                    (y, table.regressors(), None)
                }
                None => {
                    let sample = simulate_first(cfg, 0)?;
                    (sample.y, sample.x, Some(sample.beta_true))
                }
            };
            let (t, n) = x.shape();
            let lambda = match lambda {
                Some(l) => *l,
                None => cfg.lambda_rule.lambda(Dimensions::from_counts(
                    t,
                    n.max(2),
                    cfg.grid[0].s.min(n).max(1),
                )),
            };
            let problem = LassoProblem::new(&y, x, lambda)?;
            let options = FitOptions {
                tol: cfg.lasso.tol,
                max_iter: cfg.lasso.max_iter,
                warm_start: None,
            };
            let solution = fit(&problem, &options)?;
            let mut body = json!({
                "T": t,
                "N": n,
                "lambda": lambda,
                "lambda_max": problem.lambda_max(),
                "solution": solution,
            });
            if let Some(beta) = truth {
                let err = estimation_errors(problem.x(), &solution.beta_hat, &beta);
                body["beta_true"] = json!(beta);
                body["l1_error"] = json!(err.l1);
                body["l2_pred_error"] = json!(err.prediction);
            }
            emit(common, "lasso", &io::document("lasso", &resolved, body))
        }
        Command::Experiment { kind, timings } => {
            let extra: Vec<String> = kind
                .map(|k| format!("experiment=\"{}\"", ExperimentKind::from(k).name()))
                .into_iter()
                .collect();
            let resolved = resolve(common, &extra)?;
            let options = RunOptions {
                workers: workers(common),
                timings: *timings,
            };
            let out = experiments::run_experiment(&resolved.config, options)?;
            write_outputs(common, &resolved, out)
        }
        Command::Rate { timings } => {
            let resolved = resolve(common, &[])?;
            let options = RunOptions {
                workers: workers(common),
                timings: *timings,
            };
            let out = experiments::run_rate(&resolved.config, options)?;
            write_outputs(common, &resolved, out)
        }
    }
}

fn write_outputs(
    common: &CommonArgs,
    resolved: &ResolvedConfig,
    out: experiments::AnyOutput,
) -> AppResult<()> {
    let dir: &Path = common.out.as_deref().unwrap_or(Path::new("results"));
    let summary = io::document(out.name, resolved, out.summary);
    io::write_file(
        &dir.join("summary.json"),
        io::to_pretty(&summary).as_bytes(),
    )?;
    match common.format {
        Some(Format::Json) => {
            let records = io::document(out.name, resolved, json!(out.records));
            io::write_file(
                &dir.join("records.json"),
                io::to_pretty(&records).as_bytes(),
            )?;
        }
        _ => io::write_file(
            &dir.join("records.csv"),
            &io::records_csv(out.name, resolved, &out.records)?,
        )?,
    }
    eprintln!(
        "{}: {} records written to {}",
        out.name,
        out.records.len(),
        dir.display()
    );
    Ok(())
}
