use std::time::Instant;

use coint_rec_core::dgp::build_covariance;
use coint_rec_core::linalg::{extreme_eigenvalues, symmetric_eigen};
use coint_rec_core::rng::GaussianStream;
use coint_rec_core::spectral::shifted_eigenvalues;
use coint_rec_core::theory::{matrix_chernoff_tail, summand_norm_bound, ChernoffSide, Dimensions};
use coint_rec_core::Matrix;
use serde::Serialize;

use super::{
    elapsed_ms, parallel_map, point_seed, replication_seed, ExperimentOutput, Frequency, MeanCheck,
    ReplicationRecord, RunOptions,
};
use crate::config::ExperimentConfig;
use crate::error::AppResult;

/// One tail of the matrix Chernoff comparison at a given `delta`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChernoffTail {
    pub delta: f64,
    /// `P(lambda_min <= (1 - delta) mu_min)`.
    pub min_tail: Frequency,
    /// Bound with `R` the largest observed summand norm.
    pub min_bound: f64,
    /// Bound with `R` the summand truncation level.
    pub min_bound_theory: f64,
    /// `freq <= bound + 3 se` when `bound <= 1`.
    pub min_dominance: Option<bool>,
    pub min_dominance_theory: Option<bool>,
    /// `P(lambda_max >= (1 + delta) mu_max)`.
    pub max_tail: Frequency,
    pub max_bound: f64,
    pub max_bound_theory: f64,
    pub max_dominance: Option<bool>,
    pub max_dominance_theory: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChernoffPointSummary {
    pub phi: f64,
    pub horizon: usize,
    pub support_size: usize,
    pub replications: u64,
    /// `sum_t lambda_{phi,t}`.
    pub weight_sum: f64,
    /// `lambda_min(Sigma_A) sum_t lambda_{phi,t}`.
    pub mu_min: f64,
    /// `lambda_max(Sigma_A) sum_t lambda_{phi,t}`.
    pub mu_max: f64,
    pub r_observed: f64,
    pub r_theory: f64,
    pub mu_min_check: MeanCheck,
    pub mu_max_check: MeanCheck,
    pub tails: Vec<ChernoffTail>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChernoffSummary {
    pub points: Vec<ChernoffPointSummary>,
}

fn dominance(freq: &Frequency, bound: f64) -> Option<bool> {
    (bound <= 1.0).then_some(freq.freq <= bound + 3.0 * freq.se)
}

/// Simulate `sum_t lambda_{phi,t} e_t e_t'` with `e_t ~ N(0, Sigma_A)` and
/// compare its extreme-eigenvalue tails with the matrix Chernoff bound.
pub fn run_chernoff_experiment(
    config: &ExperimentConfig,
    options: RunOptions,
) -> AppResult<ExperimentOutput<ChernoffSummary>> {
    let d = config.chernoff.support_size;
    let horizon = config.chernoff.horizon;
    let cov = build_covariance(&config.covariance.spec(d))?;
    let eig = symmetric_eigen(cov.matrix());
    let w_min = eig.vectors.column(0).into_owned();
    let w_max = eig.vectors.column(d - 1).into_owned();
    let c = &config.constants;
    let cap_sigma = c.cap_sigma.unwrap_or_else(|| cov.cap_sigma());
    let dims = Dimensions::from_counts(horizon, d.max(2), d);

    let mut records = Vec::new();
    let mut points = Vec::new();
    for (k, &phi) in config.phi_grid.iter().enumerate() {
        let weights = shifted_eigenvalues(horizon, phi)?;
        let seed0 = point_seed(config.master_seed, k);
        let rows = parallel_map(options.workers, config.replications, |id| {
            let start = options.timings.then(Instant::now);
            let seed = replication_seed(seed0, id);
            let mut stream = GaussianStream::from_seed(seed);
            let mut z = vec![0.0; d];
            let mut e = vec![0.0; d];
            let mut sum = Matrix::zeros(d, d);
            let mut max_summand = 0.0f64;
            for &w in weights.values() {
                cov.draw_into(&mut stream, &mut z, &mut e);
                let norm2: f64 = e.iter().map(|v| v * v).sum();
                max_summand = max_summand.max(w * norm2);
                for i in 0..d {
                    for j in 0..d {
                        sum[(i, j)] += w * e[i] * e[j];
                    }
                }
            }
            let (lo, hi) = extreme_eigenvalues(&sum);
            let mut record = ReplicationRecord::new(id, horizon, d, d, seed);
            record.phi = Some(phi);
            record.chernoff_min_stat = Some(lo);
            record.chernoff_max_stat = Some(hi);
            record.chernoff_max_summand = Some(max_summand);
            record.chernoff_q_min = Some(w_min.dot(&(&sum * &w_min)));
            record.chernoff_q_max = Some(w_max.dot(&(&sum * &w_max)));
            record.runtime_ms = elapsed_ms(start);
            Ok(record)
        })?;

        let weight_sum = weights.sum();
        let mu_min = cov.c_sigma() * weight_sum;
        let mu_max = cov.cap_sigma() * weight_sum;
        let r_observed = rows
            .iter()
            .filter_map(|r| r.chernoff_max_summand)
            .fold(0.0, f64::max);
        let r_theory = summand_norm_bound(cap_sigma, c.c1, dims, phi);
        let q_min: Vec<f64> = rows.iter().filter_map(|r| r.chernoff_q_min).collect();
        let q_max: Vec<f64> = rows.iter().filter_map(|r| r.chernoff_q_max).collect();
        let tails =
            config
                .chernoff
                .deltas
                .iter()
                .map(|&delta| {
                    let min_tail = Frequency::from_flags(rows.iter().map(|r| {
                        r.chernoff_min_stat.unwrap_or(f64::NAN) <= (1.0 - delta) * mu_min
                    }));
                    let max_tail = Frequency::from_flags(rows.iter().map(|r| {
                        r.chernoff_max_stat.unwrap_or(f64::NAN) >= (1.0 + delta) * mu_max
                    }));
                    // both tails are driven by mu_min / R
                    let min_bound =
                        matrix_chernoff_tail(mu_min / r_observed, delta, d, ChernoffSide::Min)?;
                    let max_bound =
                        matrix_chernoff_tail(mu_min / r_observed, delta, d, ChernoffSide::Max)?;
                    let min_bound_theory =
                        matrix_chernoff_tail(mu_min / r_theory, delta, d, ChernoffSide::Min)?;
                    let max_bound_theory =
                        matrix_chernoff_tail(mu_min / r_theory, delta, d, ChernoffSide::Max)?;
                    Ok(ChernoffTail {
                        delta,
                        min_tail,
                        min_bound,
                        min_bound_theory,
                        min_dominance: dominance(&min_tail, min_bound),
                        min_dominance_theory: dominance(&min_tail, min_bound_theory),
                        max_tail,
                        max_bound,
                        max_bound_theory,
                        max_dominance: dominance(&max_tail, max_bound),
                        max_dominance_theory: dominance(&max_tail, max_bound_theory),
                    })
                })
                .collect::<AppResult<Vec<_>>>()?;
        points.push(ChernoffPointSummary {
            phi,
            horizon,
            support_size: d,
            replications: config.replications,
            weight_sum,
            mu_min,
            mu_max,
            r_observed,
            r_theory,
            mu_min_check: MeanCheck::new(mu_min, &q_min),
            mu_max_check: MeanCheck::new(mu_max, &q_max),
            tails,
        });
        records.extend(rows);
    }
    Ok(ExperimentOutput {
        records,
        summary: ChernoffSummary { points },
    })
}
