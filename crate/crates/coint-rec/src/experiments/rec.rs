use std::time::Instant;

use coint_rec_core::dgp::simulate_cointegrated;
use coint_rec_core::linalg::gram;
use coint_rec_core::rec::{
    default_bickel_m, rec_lower_bound, rec_sampled, BickelMethod, ConeProblem, DescentOptions,
};
use coint_rec_core::rng;
use coint_rec_core::theory::{rec_probability_bound, ProbabilityBound, TheoryConstants};
use serde::Serialize;

use super::{
    elapsed_ms, parallel_map, replication_seed, setup_point, summarize, ExperimentOutput,
    Frequency, PointSummary, ReplicationRecord, RunOptions,
};
use crate::config::ExperimentConfig;
use crate::error::{AppError, AppResult};

#[derive(Clone, Debug, Serialize)]
pub struct RecPointSummary {
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub s: usize,
    pub replications: u64,
    pub kappa0: f64,
    pub m_used: Option<usize>,
    pub bickel_method: Option<BickelMethod>,
    pub descent_supports: Option<u64>,
    pub descent_supports_exhaustive: Option<bool>,
    /// `rec_lower >= kappa0`.
    pub lower_event: Frequency,
    /// `rec_upper >= kappa0`.
    pub upper_event: Option<Frequency>,
    pub theory_bound: ProbabilityBound,
    /// The bound's constants satisfy `s + m_kappa <= N`.
    pub theory_applicable: bool,
    pub theory_note: Option<String>,
    /// `freq + 3 se >= bound`, where applicable and non-vacuous.
    pub dominance: Option<bool>,
    pub constants: TheoryConstants,
    pub aggregate: PointSummary,
}

/// Change of the lower-event frequency between consecutive grid points.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TrendStep {
    pub from: usize,
    pub to: usize,
    pub difference: f64,
    pub se: f64,
    /// `difference >= -2 se`.
    pub nondecreasing_within_2se: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecSummary {
    pub points: Vec<RecPointSummary>,
    pub trend: Vec<TrendStep>,
}

struct RecRow {
    record: ReplicationRecord,
    method: Option<BickelMethod>,
    supports: Option<(u64, bool)>,
}

/// Frequencies of `{rec_lower >= kappa0}` and `{rec_upper >= kappa0}` per
/// grid point against the REC probability bound.
pub fn run_rec_experiment(
    config: &ExperimentConfig,
    options: RunOptions,
) -> AppResult<ExperimentOutput<RecSummary>> {
    let mut records = Vec::new();
    let mut points = Vec::new();
    for (k, &point) in config.grid.iter().enumerate() {
        let setup = setup_point(config, k, point)?;
        let constants = setup.constants;
        let f_t = constants.f_t;
        let c0 = config.constants.c0;
        let m = match config.rec.m {
            Some(m) => Some(m),
            None => default_bickel_m(point.s, point.n, Some(constants.m_kappa)),
        };
        let rows = parallel_map(options.workers, config.replications, |id| {
            let start = options.timings.then(Instant::now);
            let seed = replication_seed(setup.seed, id);
            let sample =
                simulate_cointegrated(point.t, &setup.beta.values, &setup.covariance, seed)?;
            let problem = ConeProblem::from_gram(gram(&sample.x), f_t, point.s, c0)?;
            let (lower, bickel, _) = rec_lower_bound(&problem, m, config.budget)?;
            let upper = config.rec.upper.then(|| {
                let descent = DescentOptions {
                    restarts: config.rec.restarts,
                    iters: config.rec.iters,
                    support_budget: config.rec.support_budget,
                    seed: rng::derive_seed(rng::derive_seed(setup.seed, id), rng::purpose::DESCENT),
                };
                rec_sampled(&problem, &descent)
            });
            let mut record = ReplicationRecord::new(id, point.t, point.n, point.s, seed);
            record.rec_lower = Some(lower);
            record.rec_upper = upper.as_ref().map(|u| u.upper_estimate);
            record.kappa0 = Some(constants.kappa_0);
            record.rec_event = Some(lower >= constants.kappa_0);
            record.runtime_ms = elapsed_ms(start);
            Ok(RecRow {
                record,
                method: bickel.map(|b| b.method),
                supports: upper.map(|u| (u.supports_scanned, u.supports_exhaustive)),
            })
        })?;

        let kappa0 = constants.kappa_0;
        let lower_event = Frequency::from_flags(
            rows.iter()
                .map(|r| r.record.rec_lower.unwrap_or(f64::NAN) >= kappa0),
        );
        let upper_event = config.rec.upper.then(|| {
            Frequency::from_flags(
                rows.iter()
                    .map(|r| r.record.rec_upper.unwrap_or(f64::NAN) >= kappa0),
            )
        });
        let theory_bound = rec_probability_bound(point.dims(), constants.inputs.c1, constants.c2)?;
        let mut notes = Vec::new();
        if !constants.feasible {
            notes.push(format!(
                "s + m_kappa = {} exceeds N = {}; the theoretical bound does not apply at this point",
                point.s as u64 + constants.m_kappa,
                point.n
            ));
        }
        if !constants.theorem_precondition {
            notes.push("ceil(c0^2 C_sigma s / c_sigma) < N fails".to_string());
        }
        // the descent estimate bounds kappa from above, so it is the right
        // side to compare against a lower bound on P(kappa >= kappa0)
        let compared = upper_event.unwrap_or(lower_event);
        let dominance = (constants.feasible && !theory_bound.vacuous)
            .then_some(compared.freq + 3.0 * compared.se >= theory_bound.value);
        let aggregate = summarize(&rows.iter().map(|r| r.record.clone()).collect::<Vec<_>>())?
            .into_iter()
            .next()
            .ok_or_else(|| AppError::Input("empty grid point".into()))?;
        points.push(RecPointSummary {
            t: point.t,
            n: point.n,
            s: point.s,
            replications: config.replications,
            kappa0,
            m_used: m,
            bickel_method: rows[0].method,
            descent_supports: rows[0].supports.map(|s| s.0),
            descent_supports_exhaustive: rows[0].supports.map(|s| s.1),
            lower_event,
            upper_event,
            theory_bound,
            theory_applicable: constants.feasible,
            theory_note: (!notes.is_empty()).then(|| notes.join("; ")),
            dominance,
            constants,
            aggregate,
        });
        records.extend(rows.into_iter().map(|r| r.record));
    }
    let trend = points
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0].lower_event, &w[1].lower_event);
            let se = (a.se * a.se + b.se * b.se).sqrt();
            let difference = b.freq - a.freq;
            TrendStep {
                from: w[0].n,
                to: w[1].n,
                difference,
                se,
                nondecreasing_within_2se: difference >= -2.0 * se,
            }
        })
        .collect();
    Ok(ExperimentOutput {
        records,
        summary: RecSummary { points, trend },
    })
}
