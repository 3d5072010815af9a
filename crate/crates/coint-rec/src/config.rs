//! Experiment configuration: TOML files, defaults and `key=value` overrides.
//!
//! Every field has a default, so a config file only lists what it changes.
//! Unknown keys are rejected both in files and in overrides.

use std::path::Path;

use coint_rec_core::dgp::{CovarianceKind, CovarianceSpec, SupportPattern};
use coint_rec_core::theory::{self, Dimensions};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

/// Keys that are absent from the defaults but may still be overridden.
const OPTIONAL_KEYS: &[&str] = &[
    "constants.c_sigma",
    "constants.C_sigma",
    "rec.m",
    "lasso.truncation_m",
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Rec,
    #[default]
    Lasso,
    Chernoff,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Rec => "rec",
            ExperimentKind::Lasso => "lasso",
            ExperimentKind::Chernoff => "chernoff",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPoint {
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub s: usize,
}

impl GridPoint {
    pub fn dims(&self) -> Dimensions {
        Dimensions::from_counts(self.t, self.n, self.s)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CovarianceFamily {
    #[default]
    Identity,
    Toeplitz,
    Equicorrelation,
}

/// Covariance of the stacked innovation `(eps_y, eps_x')'`; the dimension is
/// implied by the experiment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CovarianceConfig {
    pub kind: CovarianceFamily,
    pub rho: f64,
}

impl CovarianceConfig {
    pub fn spec(&self, dim: usize) -> CovarianceSpec {
        let kind = match self.kind {
            CovarianceFamily::Identity => CovarianceKind::Identity,
            CovarianceFamily::Toeplitz => CovarianceKind::Toeplitz { rho: self.rho },
            CovarianceFamily::Equicorrelation => CovarianceKind::Equicorrelation { rho: self.rho },
        };
        CovarianceSpec::new(dim, kind)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantsConfig {
    pub c0: f64,
    pub delta: f64,
    pub kappa_free: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    /// Overrides the smallest eigenvalue of the realized covariance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_sigma: Option<f64>,
    /// Overrides the largest eigenvalue of the realized covariance.
    #[serde(rename = "C_sigma", skip_serializing_if = "Option::is_none")]
    pub cap_sigma: Option<f64>,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self {
            c0: 3.0,
            delta: theory::DEFAULT_DELTA,
            kappa_free: theory::DEFAULT_KAPPA_FREE,
            c1: theory::DEFAULT_C1,
            c_sigma: None,
            cap_sigma: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaRuleKind {
    /// `lambda = scale * T^{1+xi} * sqrt(log N)`.
    #[default]
    Rate,
    Fixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LambdaRule {
    pub rule: LambdaRuleKind,
    pub xi: f64,
    pub scale: f64,
    /// Penalty used by the fixed rule.
    pub value: f64,
}

impl Default for LambdaRule {
    fn default() -> Self {
        Self {
            rule: LambdaRuleKind::Rate,
            xi: 0.1,
            scale: 2.0,
            value: 1.0,
        }
    }
}

impl LambdaRule {
    pub fn lambda(&self, dims: Dimensions) -> f64 {
        match self.rule {
            LambdaRuleKind::Rate => theory::rate_rule_lambda(self.scale, dims, self.xi),
            LambdaRuleKind::Fixed => self.value,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    #[default]
    FirstS,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BetaConfig {
    pub magnitude: f64,
    pub pattern: PatternKind,
    /// Seed of the random support pattern.
    pub seed: u64,
}

impl Default for BetaConfig {
    fn default() -> Self {
        Self {
            magnitude: 1.0,
            pattern: PatternKind::FirstS,
            seed: 0,
        }
    }
}

impl BetaConfig {
    pub fn pattern(&self) -> SupportPattern {
        match self.pattern {
            PatternKind::FirstS => SupportPattern::FirstS,
            PatternKind::Random => SupportPattern::Random { seed: self.seed },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecConfig {
    /// Run the descent upper estimate.
    pub upper: bool,
    pub restarts: usize,
    pub iters: usize,
    /// Supports visited by the descent; sampled when `C(N, s)` is larger.
    pub support_budget: u64,
    /// Bickel `m`; defaults to `m_kappa` when feasible.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
}

impl Default for RecConfig {
    fn default() -> Self {
        Self {
            upper: true,
            restarts: 32,
            iters: 200,
            support_budget: 1_000_000,
            m: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LassoConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Truncation exponent of the empirical-process bound; `1/2 + xi` if unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_m: Option<f64>,
    /// Compute the certified REC lower bound per replication.
    pub compute_rec: bool,
    pub cone_c0: f64,
    /// Relative slack on the error-bound comparison, absorbing solver tolerance.
    pub bound_slack: f64,
}

impl Default for LassoConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100_000,
            truncation_m: None,
            compute_rec: true,
            cone_c0: 3.0,
            bound_slack: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChernoffConfig {
    /// `|A|`, at most 6.
    pub support_size: usize,
    pub horizon: usize,
    pub deltas: Vec<f64>,
}

impl Default for ChernoffConfig {
    fn default() -> Self {
        Self {
            support_size: 2,
            horizon: 100,
            deltas: vec![0.3, 0.5, 0.8],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateConfig {
    pub horizons: Vec<usize>,
    #[serde(rename = "N")]
    pub n: usize,
    pub s: usize,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            horizons: vec![100, 200, 400, 800, 1600],
            n: 50,
            s: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub master_seed: u64,
    pub replications: u64,
    /// Cap on exhaustively enumerated subsets.
    pub budget: u64,
    pub grid: Vec<GridPoint>,
    pub phi_grid: Vec<f64>,
    pub a_grid: Vec<f64>,
    pub covariance: CovarianceConfig,
    pub constants: ConstantsConfig,
    pub lambda_rule: LambdaRule,
    pub beta: BetaConfig,
    pub rec: RecConfig,
    pub lasso: LassoConfig,
    pub chernoff: ChernoffConfig,
    pub rate: RateConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::Lasso,
            master_seed: 20_240_601,
            replications: 200,
            budget: 10_000,
            grid: vec![GridPoint {
                t: 200,
                n: 50,
                s: 3,
            }],
            phi_grid: vec![0.1],
            a_grid: vec![0.05, 0.1, 0.2, 0.3, 0.5, 0.75, 1.0, 2.0, 5.0, 10.0],
            covariance: CovarianceConfig::default(),
            constants: ConstantsConfig::default(),
            lambda_rule: LambdaRule::default(),
            beta: BetaConfig::default(),
            rec: RecConfig::default(),
            lasso: LassoConfig::default(),
            chernoff: ChernoffConfig::default(),
            rate: RateConfig::default(),
        }
    }
}

fn invalid(msg: impl Into<String>) -> AppError {
    AppError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn validate(&self) -> AppResult<()> {
        if self.replications == 0 {
            return Err(invalid("replications must be >= 1"));
        }
        if self.budget == 0 {
            return Err(invalid("budget must be >= 1"));
        }
        if self.grid.is_empty() {
            return Err(invalid("grid must not be empty"));
        }
        for p in &self.grid {
            if p.t == 0 || p.n < 2 || p.s == 0 || p.s > p.n {
                return Err(invalid(format!(
                    "grid point (T={}, N={}, s={}) needs T >= 1, N >= 2, 1 <= s <= N",
                    p.t, p.n, p.s
                )));
            }
        }
        if self.phi_grid.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(invalid("phi_grid entries must be finite and >= 0"));
        }
        if self.a_grid.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(invalid("a_grid entries must be finite and > 0"));
        }
        if !(self.constants.c0 > 0.0) {
            return Err(invalid("constants.c0 must be > 0"));
        }
        if !(self.lambda_rule.xi > 0.0) && self.lambda_rule.rule == LambdaRuleKind::Rate {
            return Err(invalid("lambda_rule.xi must be > 0"));
        }
        let lambda_ok = match self.lambda_rule.rule {
            LambdaRuleKind::Rate => self.lambda_rule.scale > 0.0,
            LambdaRuleKind::Fixed => self.lambda_rule.value >= 0.0,
        };
        if !lambda_ok {
            return Err(invalid(
                "lambda_rule needs scale > 0 (rate) or value >= 0 (fixed)",
            ));
        }
        if !(self.lasso.tol > 0.0) || self.lasso.max_iter == 0 {
            return Err(invalid("lasso.tol must be > 0 and lasso.max_iter >= 1"));
        }
        let ch = &self.chernoff;
        if ch.support_size == 0 || ch.support_size > 6 || ch.horizon == 0 {
            return Err(invalid(
                "chernoff.support_size must be in 1..=6 and chernoff.horizon >= 1",
            ));
        }
        if ch.deltas.iter().any(|d| !(*d >= 0.0 && *d <= 1.0)) {
            return Err(invalid("chernoff.deltas must lie in [0, 1]"));
        }
        if self.rec.iters == 0 || self.rec.support_budget == 0 {
            return Err(invalid("rec.iters and rec.support_budget must be >= 1"));
        }
        Ok(())
    }
}

/// A config after defaults, file contents and overrides have been applied.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedConfig {
    pub config: ExperimentConfig,
    pub overrides: Vec<String>,
}

fn merge(base: &mut toml::Table, top: toml::Table) {
    for (key, value) in top {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(t)) => merge(b, t),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

fn parse_override_value(raw: &str) -> toml::Value {
    let raw = raw.trim();
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn key_exists(table: &toml::Table, path: &[&str]) -> bool {
    match path {
        [] => false,
        [last] => table.contains_key(*last),
        [head, rest @ ..] => {
            matches!(table.get(*head), Some(toml::Value::Table(t)) if key_exists(t, rest))
        }
    }
}

fn set_key(table: &mut toml::Table, path: &[&str], value: toml::Value) {
    match path {
        [] => {}
        [last] => {
            table.insert((*last).to_string(), value);
        }
        [head, rest @ ..] => {
            let entry = table
                .entry((*head).to_string())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            if let toml::Value::Table(t) = entry {
                set_key(t, rest, value);
            }
        }
    }
}

/// Apply one `key=value` override where `key` is a dotted path.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> AppResult<()> {
    let (key, raw) = assignment.split_once('=').ok_or_else(|| {
        invalid(format!(
            "override `{assignment}` is not of the form key=value"
        ))
    })?;
    let key = key.trim();
    let path: Vec<&str> = key.split('.').collect();
    if path.iter().any(|p| p.is_empty())
        || !(key_exists(table, &path) || OPTIONAL_KEYS.contains(&key))
    {
        return Err(invalid(format!("override references unknown key `{key}`")));
    }
    set_key(table, &path, parse_override_value(raw));
    Ok(())
}

/// Resolve a config from text (or defaults when `None`) plus overrides.
pub fn resolve_str(text: Option<&str>, overrides: &[String]) -> AppResult<ResolvedConfig> {
    let defaults = toml::Value::try_from(ExperimentConfig::default())
        .map_err(|e| invalid(format!("cannot serialize defaults: {e}")))?;
    let mut table = match defaults {
        toml::Value::Table(t) => t,
        _ => unreachable!("config serializes to a table"),
    };
    if let Some(text) = text {
        let file: toml::Table = text
            .parse()
            .map_err(|e| invalid(format!("cannot parse config: {e}")))?;
        merge(&mut table, file);
    }
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let config: ExperimentConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| invalid(format!("invalid config: {}", e.message())))?;
    config.validate()?;
    Ok(ResolvedConfig {
        config,
        overrides: overrides.to_vec(),
    })
}

/// Resolve a config file (or defaults when `path` is `None`) plus overrides.
pub fn load(path: Option<&Path>, overrides: &[String]) -> AppResult<ResolvedConfig> {
    let text = match path {
        Some(p) => Some(
            std::fs::read_to_string(p)
                .map_err(|e| invalid(format!("cannot read config {}: {e}", p.display())))?,
        ),
        None => None,
    };
    resolve_str(text.as_deref(), overrides)
}
