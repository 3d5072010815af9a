use std::time::Instant;

use coint_rec_core::dgp::simulate_cointegrated;
use coint_rec_core::lasso::{
    cone_membership, empirical_process_stat, error_bound_rhs, estimation_errors, fit, FitOptions,
    LassoProblem,
};
use coint_rec_core::linalg::gram;
use coint_rec_core::rec::{default_bickel_m, rec_lower_bound, ConeProblem};
use coint_rec_core::theory::{
    default_truncation_exponent, empirical_process_bound, lasso_error_probability,
    EmpiricalProcessForm, LassoProbabilityForm, ProbabilityBound, TheoryConstants,
};
use serde::Serialize;

use super::{
    elapsed_ms, parallel_map, replication_seed, setup_point, summarize, ExperimentOutput,
    Frequency, PointSummary, ReplicationRecord, RunOptions,
};
use crate::config::ExperimentConfig;
use crate::error::{AppError, AppResult};

/// Empirical tail of the empirical-process statistic at one threshold.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TailPoint {
    pub a: f64,
    /// Frequency of `f_T^2 ||X' eps_y||_inf >= a`.
    pub frequency: Frequency,
    pub bound: ProbabilityBound,
    pub bound_stated_form: ProbabilityBound,
    /// `freq <= bound + 3 se`, when the bound is non-vacuous.
    pub dominance: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LassoPointSummary {
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub s: usize,
    pub replications: u64,
    pub lambda: f64,
    /// `f_T^2 lambda`.
    pub lambda_tilde: f64,
    pub truncation_m: f64,
    pub non_converged: u64,
    pub ep_event: Frequency,
    pub rec_event: Option<Frequency>,
    pub bound_event: Option<Frequency>,
    pub cone_event: Frequency,
    /// `bound_event` given `ep_event` and `rec_event`; must be 1.
    pub bound_given_events: Option<Frequency>,
    /// `bound_event` given `ep_event` and a positive certified REC bound.
    pub bound_given_ep_and_positive_rec: Option<Frequency>,
    /// `cone_event` given `ep_event`; must be 1.
    pub cone_given_ep: Frequency,
    pub implication_holds: bool,
    /// Error bound with `phi0 = kappa0`.
    pub kappa0_bound_rhs: f64,
    /// Frequency of the realized loss staying below `kappa0_bound_rhs`.
    pub kappa0_bound_event: Frequency,
    pub probability_displayed: ProbabilityBound,
    pub probability_substituted: ProbabilityBound,
    /// `freq + 3 se >= displayed probability`, when non-vacuous.
    pub probability_dominance: Option<bool>,
    pub tail: Vec<TailPoint>,
    pub constants: TheoryConstants,
    pub aggregate: PointSummary,
}

#[derive(Clone, Debug, Serialize)]
pub struct LassoSummary {
    pub points: Vec<LassoPointSummary>,
}

/// Realized `||X (beta_hat - beta)||^2 + lambda ||beta_hat - beta||_1`.
fn realized_loss(r: &ReplicationRecord, lambda: f64) -> f64 {
    r.l2_pred_error.unwrap_or(f64::NAN) + lambda * r.l1_error.unwrap_or(f64::NAN)
}

/// Fit the lasso on simulated samples and check the error-bound machinery.
pub fn run_lasso_experiment(
    config: &ExperimentConfig,
    options: RunOptions,
) -> AppResult<ExperimentOutput<LassoSummary>> {
    let mut records = Vec::new();
    let mut points = Vec::new();
    let fit_options = FitOptions {
        tol: config.lasso.tol,
        max_iter: config.lasso.max_iter,
        warm_start: None,
    };
    let truncation_m = config
        .lasso
        .truncation_m
        .unwrap_or_else(|| default_truncation_exponent(config.lambda_rule.xi));
    for (k, &point) in config.grid.iter().enumerate() {
        let setup = setup_point(config, k, point)?;
        let constants = setup.constants;
        let dims = point.dims();
        let f_t = constants.f_t;
        let lambda = config.lambda_rule.lambda(dims);
        let lambda_tilde = f_t * f_t * lambda;
        let c0 = config.lasso.cone_c0;
        let m = match config.rec.m {
            Some(m) => Some(m),
            None => default_bickel_m(point.s, point.n, Some(constants.m_kappa)),
        };
        let rows = parallel_map(options.workers, config.replications, |id| {
            let start = options.timings.then(Instant::now);
            let seed = replication_seed(setup.seed, id);
            let sample =
                simulate_cointegrated(point.t, &setup.beta.values, &setup.covariance, seed)?;
            let ep_stat = empirical_process_stat(&sample.x, &sample.eps_y, f_t)?;
            let rec_lower = if config.lasso.compute_rec {
                let problem = ConeProblem::from_gram(gram(&sample.x), f_t, point.s, c0)?;
                Some(rec_lower_bound(&problem, m, config.budget)?.0)
            } else {
                None
            };
            let problem = LassoProblem::new(&sample.y, sample.x, lambda)?;
            let sol = fit(&problem, &fit_options)?;
            let errors = estimation_errors(problem.x(), &sol.beta_hat, &setup.beta.values);
            let diff: Vec<f64> = sol
                .beta_hat
                .iter()
                .zip(&setup.beta.values)
                .map(|(a, b)| a - b)
                .collect();
            let cone = cone_membership(&diff, &setup.beta.support, c0)?;

            let mut record = ReplicationRecord::new(id, point.t, point.n, point.s, seed);
            record.ep_stat = Some(ep_stat);
            record.ep_event = Some(ep_stat <= lambda_tilde / 4.0);
            record.l1_error = Some(errors.l1);
            record.l2_pred_error = Some(errors.prediction);
            record.cone_event = Some(cone.inside);
            record.converged = Some(sol.converged);
            if let Some(lower) = rec_lower {
                record.rec_lower = Some(lower);
                record.kappa0 = Some(constants.kappa_0);
                record.rec_event = Some(lower >= constants.kappa_0);
                if lower > 0.0 {
                    let rhs = error_bound_rhs(lambda, dims, lower)?;
                    record.bound_rhs = Some(rhs);
                    record.bound_event = Some(
                        realized_loss(&record, lambda) <= rhs * (1.0 + config.lasso.bound_slack),
                    );
                }
            }
            record.runtime_ms = elapsed_ms(start);
            Ok(record)
        })?;

        let converged: Vec<&ReplicationRecord> =
            rows.iter().filter(|r| r.converged == Some(true)).collect();
        let non_converged = rows.len() as u64 - converged.len() as u64;
        let flag = |get: fn(&ReplicationRecord) -> Option<bool>| -> Option<Frequency> {
            let flags: Vec<bool> = converged.iter().filter_map(|r| get(r)).collect();
            (!flags.is_empty()).then(|| Frequency::from_flags(flags))
        };
        let ep_event = Frequency::from_flags(converged.iter().map(|r| r.ep_event == Some(true)));
        let cone_event =
            Frequency::from_flags(converged.iter().map(|r| r.cone_event == Some(true)));
        let bound_given_events = config.lasso.compute_rec.then(|| {
            Frequency::from_flags(
                converged
                    .iter()
                    .filter(|r| r.ep_event == Some(true) && r.rec_event == Some(true))
                    .map(|r| r.bound_event == Some(true)),
            )
        });
        let bound_given_ep_and_positive_rec = config.lasso.compute_rec.then(|| {
            Frequency::from_flags(
                converged
                    .iter()
                    .filter(|r| r.ep_event == Some(true) && r.bound_event.is_some())
                    .map(|r| r.bound_event == Some(true)),
            )
        });
        let cone_given_ep = Frequency::from_flags(
            converged
                .iter()
                .filter(|r| r.ep_event == Some(true))
                .map(|r| r.cone_event == Some(true)),
        );
        let implication_holds = cone_given_ep.all()
            && bound_given_events.is_none_or(|f| f.all())
            && bound_given_ep_and_positive_rec.is_none_or(|f| f.all());

        let kappa0_bound_rhs = error_bound_rhs(lambda, dims, constants.kappa_0)?;
        let kappa0_bound_event = Frequency::from_flags(
            converged
                .iter()
                .map(|r| realized_loss(r, lambda) <= kappa0_bound_rhs),
        );
        let cap_sigma = constants.inputs.cap_sigma;
        let (c1, c2) = (constants.inputs.c1, constants.c2);
        let probability_displayed = if lambda > 0.0 {
            lasso_error_probability(
                lambda,
                dims,
                cap_sigma,
                truncation_m,
                c1,
                c2,
                LassoProbabilityForm::Displayed,
            )?
        } else {
            ProbabilityBound::lower(f64::NEG_INFINITY)
        };
        let probability_substituted = if lambda > 0.0 {
            lasso_error_probability(
                lambda,
                dims,
                cap_sigma,
                truncation_m,
                c1,
                c2,
                LassoProbabilityForm::Substituted,
            )?
        } else {
            ProbabilityBound::lower(f64::NEG_INFINITY)
        };
        let probability_dominance = (!probability_displayed.vacuous).then_some(
            kappa0_bound_event.freq + 3.0 * kappa0_bound_event.se >= probability_displayed.value,
        );

        let tail = config
            .a_grid
            .iter()
            .map(|&a| {
                let frequency =
                    Frequency::from_flags(rows.iter().map(|r| r.ep_stat.unwrap_or(f64::NAN) >= a));
                let bound = empirical_process_bound(
                    a,
                    dims,
                    cap_sigma,
                    truncation_m,
                    EmpiricalProcessForm::Derived,
                )?;
                let bound_stated_form = empirical_process_bound(
                    a,
                    dims,
                    cap_sigma,
                    truncation_m,
                    EmpiricalProcessForm::Stated,
                )?;
                let dominance =
                    (!bound.vacuous).then_some(frequency.freq <= bound.value + 3.0 * frequency.se);
                Ok(TailPoint {
                    a,
                    frequency,
                    bound,
                    bound_stated_form,
                    dominance,
                })
            })
            .collect::<AppResult<Vec<_>>>()?;

        let aggregate = summarize(&converged.iter().map(|r| (*r).clone()).collect::<Vec<_>>())
            .ok()
            .and_then(|v| v.into_iter().next())
            .ok_or_else(|| {
                AppError::Input(format!(
                    "no converged fits at T={}, N={}, s={}",
                    point.t, point.n, point.s
                ))
            })?;
        points.push(LassoPointSummary {
            t: point.t,
            n: point.n,
            s: point.s,
            replications: config.replications,
            lambda,
            lambda_tilde,
            truncation_m,
            non_converged,
            ep_event,
            rec_event: flag(|r| r.rec_event),
            bound_event: flag(|r| r.bound_event),
            cone_event,
            bound_given_events,
            bound_given_ep_and_positive_rec,
            cone_given_ep,
            implication_holds,
            kappa0_bound_rhs,
            kappa0_bound_event,
            probability_displayed,
            probability_substituted,
            probability_dominance,
            tail,
            constants,
            aggregate,
        });
        records.extend(rows);
    }
    Ok(ExperimentOutput {
        records,
        summary: LassoSummary { points },
    })
}
