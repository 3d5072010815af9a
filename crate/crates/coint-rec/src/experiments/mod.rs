//! Monte Carlo experiments.
//!
//! Replication `i` of grid point `k` draws its data from
//! `derive_seed(derive_seed(derive_seed(master_seed, k), i), DATA)`, so each
//! replication is a pure function of the config and its index. Replications
//! run on a rayon pool and are collected in index order, which makes every
//! output independent of the number of workers.

mod chernoff;
mod lasso;
mod rate;
mod rec;
mod record;
mod summary;

use coint_rec_core::dgp::{build_covariance, make_sparse_beta, Covariance, SparseBeta};
use coint_rec_core::rng;
use coint_rec_core::theory::{derive_constants, TheoryConstants, TheoryInputs};
use rayon::prelude::*;
use serde::Serialize;

pub use chernoff::{run_chernoff_experiment, ChernoffPointSummary, ChernoffSummary, ChernoffTail};
pub use lasso::{run_lasso_experiment, LassoPointSummary, LassoSummary, TailPoint};
pub use rate::{log_log_slope, run_rate_study, RatePoint, RateSummary};
pub use rec::{run_rec_experiment, RecPointSummary, RecSummary};
pub use record::ReplicationRecord;
pub use summary::{quantile_sorted, summarize, Frequency, MeanCheck, PointSummary, Quantiles};

use crate::config::{ExperimentConfig, ExperimentKind, GridPoint};
use crate::error::{AppError, AppResult};

/// Execution settings that must not change results.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    pub workers: usize,
    /// Record per-replication wall time (makes record files nondeterministic).
    pub timings: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            workers: 1,
            timings: false,
        }
    }
}

/// Records plus a typed summary.
#[derive(Clone, Debug)]
pub struct ExperimentOutput<S> {
    pub records: Vec<ReplicationRecord>,
    pub summary: S,
}

/// Records plus a summary in JSON form, for any experiment kind.
#[derive(Clone, Debug)]
pub struct AnyOutput {
    pub name: &'static str,
    pub records: Vec<ReplicationRecord>,
    pub summary: serde_json::Value,
}

fn erase<S: Serialize>(name: &'static str, out: ExperimentOutput<S>) -> AppResult<AnyOutput> {
    let summary = serde_json::to_value(&out.summary)
        .map_err(|e| AppError::Input(format!("cannot encode summary: {e}")))?;
    Ok(AnyOutput {
        name,
        records: out.records,
        summary,
    })
}

/// Run the experiment named by `config.experiment`.
pub fn run_experiment(config: &ExperimentConfig, options: RunOptions) -> AppResult<AnyOutput> {
    match config.experiment {
        ExperimentKind::Rec => erase("rec", run_rec_experiment(config, options)?),
        ExperimentKind::Lasso => erase("lasso", run_lasso_experiment(config, options)?),
        ExperimentKind::Chernoff => erase("chernoff", run_chernoff_experiment(config, options)?),
    }
}

/// Run the rate study.
pub fn run_rate(config: &ExperimentConfig, options: RunOptions) -> AppResult<AnyOutput> {
    erase("rate", run_rate_study(config, options)?)
}

/// Map `f` over `0..n` on `workers` threads, preserving index order.
pub fn parallel_map<T, F>(workers: usize, n: u64, f: F) -> AppResult<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> AppResult<T> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| AppError::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(f).collect())
}

/// Master seed of grid point `k`.
pub fn point_seed(master_seed: u64, k: usize) -> u64 {
    rng::derive_seed(master_seed, k as u64)
}

/// Data seed of one replication under a point seed.
pub fn replication_seed(point_seed: u64, replication_id: u64) -> u64 {
    rng::derive_seed(
        rng::derive_seed(point_seed, replication_id),
        rng::purpose::DATA,
    )
}

/// Everything a grid point's replications share.
pub(crate) struct PointSetup {
    pub covariance: Covariance,
    pub beta: SparseBeta,
    pub constants: TheoryConstants,
    pub seed: u64,
}

pub(crate) fn theory_inputs(
    config: &ExperimentConfig,
    point: GridPoint,
    cov: &Covariance,
) -> TheoryInputs {
    let c = &config.constants;
    TheoryInputs {
        c0: c.c0,
        c_sigma: c.c_sigma.unwrap_or_else(|| cov.c_sigma()),
        cap_sigma: c.cap_sigma.unwrap_or_else(|| cov.cap_sigma()),
        delta: c.delta,
        kappa_free: c.kappa_free,
        c1: c.c1,
        dims: point.dims(),
    }
}

pub(crate) fn setup_point(
    config: &ExperimentConfig,
    k: usize,
    point: GridPoint,
) -> AppResult<PointSetup> {
    let covariance = build_covariance(&config.covariance.spec(point.n + 1))?;
    let beta = make_sparse_beta(
        point.n,
        point.s,
        config.beta.magnitude,
        config.beta.pattern(),
    )?;
    let constants = derive_constants(&theory_inputs(config, point, &covariance))?;
    Ok(PointSetup {
        covariance,
        beta,
        constants,
        seed: point_seed(config.master_seed, k),
    })
}

pub(crate) fn elapsed_ms(start: Option<std::time::Instant>) -> Option<f64> {
    start.map(|s| s.elapsed().as_secs_f64() * 1e3)
}
