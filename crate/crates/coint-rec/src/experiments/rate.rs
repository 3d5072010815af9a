use coint_rec_core::theory::{corollary_conditions, CorollaryDiagnostics};
use serde::Serialize;

use super::{run_lasso_experiment, setup_point, ExperimentOutput, Quantiles, RunOptions};
use crate::config::{ExperimentConfig, GridPoint, LambdaRuleKind};
use crate::error::{AppError, AppResult};

#[derive(Clone, Debug, Serialize)]
pub struct RatePoint {
    #[serde(rename = "T")]
    pub t: usize,
    pub lambda: f64,
    pub l1_error: Quantiles,
    pub non_converged: u64,
    pub diagnostics: CorollaryDiagnostics,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateSummary {
    #[serde(rename = "N")]
    pub n: usize,
    pub s: usize,
    pub xi: f64,
    pub points: Vec<RatePoint>,
    /// OLS slope of `log(median l1 error)` on `log T`.
    pub slope: f64,
    pub intercept: f64,
    /// `-(1 - xi)`.
    pub reference_slope: f64,
}

/// Ordinary least squares of `y` on `x` returning `(slope, intercept)`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> AppResult<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(AppError::Input(
            "slope needs at least two paired points".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return Err(AppError::Input(
            "slope needs at least two distinct x values".into(),
        ));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Median l1 error across a horizon grid and its log-log slope.
pub fn run_rate_study(
    config: &ExperimentConfig,
    options: RunOptions,
) -> AppResult<ExperimentOutput<RateSummary>> {
    let rate = &config.rate;
    let mut horizons = rate.horizons.clone();
    horizons.sort_unstable();
    horizons.dedup();
    if horizons.len() < 4 {
        return Err(AppError::Config(
            "rate study needs at least 4 distinct horizons".into(),
        ));
    }
    if horizons[0] == 0 || horizons[horizons.len() - 1] < 8 * horizons[0] {
        return Err(AppError::Config(
            "rate study horizons must span at least a factor of 8".into(),
        ));
    }
    if config.lambda_rule.rule != LambdaRuleKind::Rate {
        return Err(AppError::Config(
            "rate study needs lambda_rule.rule = \"rate\"".into(),
        ));
    }
    let mut study = config.clone();
    study.grid = horizons
        .iter()
        .map(|&t| GridPoint {
            t,
            n: rate.n,
            s: rate.s,
        })
        .collect();
    study.lasso.compute_rec = false;
    study.validate()?;
    let out = run_lasso_experiment(&study, options)?;

    let mut points = Vec::with_capacity(horizons.len());
    for (k, (p, &t)) in out.summary.points.iter().zip(&horizons).enumerate() {
        let setup = setup_point(&study, k, study.grid[k])?;
        let l1_error = p
            .aggregate
            .quantiles
            .get("l1_error")
            .copied()
            .ok_or_else(|| AppError::Input(format!("no l1 errors at T={t}")))?;
        points.push(RatePoint {
            t,
            lambda: p.lambda,
            l1_error,
            non_converged: p.non_converged,
            diagnostics: corollary_conditions(
                study.grid[k].dims(),
                p.lambda,
                config.lambda_rule.xi,
                &setup.constants,
            )?,
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.t as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.l1_error.q50.ln()).collect();
    let (slope, intercept) = log_log_slope(&xs, &ys)?;
    Ok(ExperimentOutput {
        records: out.records,
        summary: RateSummary {
            n: rate.n,
            s: rate.s,
            xi: config.lambda_rule.xi,
            points,
            slope,
            intercept,
            reference_slope: -(1.0 - config.lambda_rule.xi),
        },
    })
}
