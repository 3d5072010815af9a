use serde::{Deserialize, Serialize};

/// One row of an experiment's output. Fields that do not apply to an
/// experiment are left empty.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication_id: u64,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub s: usize,
    /// Seed of the replication's data stream.
    pub seed: u64,
    pub phi: Option<f64>,
    pub rec_lower: Option<f64>,
    pub rec_upper: Option<f64>,
    pub kappa0: Option<f64>,
    /// `rec_lower >= kappa0`.
    pub rec_event: Option<bool>,
    /// `f_T^2 ||X' eps_y||_inf`.
    pub ep_stat: Option<f64>,
    /// `ep_stat <= f_T^2 lambda / 4`.
    pub ep_event: Option<bool>,
    pub l1_error: Option<f64>,
    pub l2_pred_error: Option<f64>,
    /// Error bound with `phi0 = rec_lower`; empty when `rec_lower <= 0`.
    pub bound_rhs: Option<f64>,
    /// `l2_pred_error + lambda l1_error <= bound_rhs`.
    pub bound_event: Option<bool>,
    /// `beta_hat - beta` lies in the cone of the true support.
    pub cone_event: Option<bool>,
    pub converged: Option<bool>,
    /// `lambda_min` of the simulated weighted sum.
    pub chernoff_min_stat: Option<f64>,
    /// `lambda_max` of the simulated weighted sum.
    pub chernoff_max_stat: Option<f64>,
    /// Largest spectral norm among the summands.
    pub chernoff_max_summand: Option<f64>,
    /// `w' M w` along the eigenvector of the smallest covariance eigenvalue.
    pub chernoff_q_min: Option<f64>,
    /// `w' M w` along the eigenvector of the largest covariance eigenvalue.
    pub chernoff_q_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub runtime_ms: Option<f64>,
}

impl ReplicationRecord {
    pub fn new(replication_id: u64, t: usize, n: usize, s: usize, seed: u64) -> Self {
        Self {
            replication_id,
            t,
            n,
            s,
            seed,
            ..Self::default()
        }
    }
}
