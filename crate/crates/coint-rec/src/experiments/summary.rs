use std::collections::BTreeMap;

use serde::Serialize;

use super::record::ReplicationRecord;
use crate::error::{AppError, AppResult};

/// Empirical frequency with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Frequency {
    pub hits: u64,
    pub n: u64,
    pub freq: f64,
    pub se: f64,
}

impl Frequency {
    pub fn from_flags(flags: impl IntoIterator<Item = bool>) -> Self {
        let (mut hits, mut n) = (0u64, 0u64);
        for f in flags {
            n += 1;
            hits += u64::from(f);
        }
        let freq = if n == 0 {
            f64::NAN
        } else {
            hits as f64 / n as f64
        };
        let se = if n == 0 {
            f64::NAN
        } else {
            (freq * (1.0 - freq) / n as f64).sqrt()
        };
        Self { hits, n, freq, se }
    }

    /// Every observation was a hit (vacuously so when there are none).
    pub fn all(&self) -> bool {
        self.hits == self.n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Quantiles {
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = p * (n - 1) as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

impl Quantiles {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut v: Vec<f64> = values.into_iter().filter(|x| !x.is_nan()).collect();
        v.sort_by(f64::total_cmp);
        Self {
            q25: quantile_sorted(&v, 0.25),
            q50: quantile_sorted(&v, 0.5),
            q75: quantile_sorted(&v, 0.75),
        }
    }
}

/// Sample mean against an expected value, within two standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanCheck {
    pub expected: f64,
    pub sample_mean: f64,
    pub se: f64,
    pub within_2se: bool,
}

impl MeanCheck {
    pub fn new(expected: f64, values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let se = (var / n).sqrt();
        Self {
            expected,
            sample_mean: mean,
            se,
            within_2se: (mean - expected).abs() <= 2.0 * se,
        }
    }
}

/// Generic aggregate of one `(T, N, s, phi)` cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointSummary {
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub s: usize,
    pub phi: Option<f64>,
    pub replications: u64,
    pub events: BTreeMap<&'static str, Frequency>,
    pub quantiles: BTreeMap<&'static str, Quantiles>,
}

type FlagField = fn(&ReplicationRecord) -> Option<bool>;
type ValueField = fn(&ReplicationRecord) -> Option<f64>;

const FLAGS: &[(&str, FlagField)] = &[
    ("rec_event", |r| r.rec_event),
    ("ep_event", |r| r.ep_event),
    ("bound_event", |r| r.bound_event),
    ("cone_event", |r| r.cone_event),
    ("converged", |r| r.converged),
];

const VALUES: &[(&str, ValueField)] = &[
    ("rec_lower", |r| r.rec_lower),
    ("rec_upper", |r| r.rec_upper),
    ("ep_stat", |r| r.ep_stat),
    ("l1_error", |r| r.l1_error),
    ("l2_pred_error", |r| r.l2_pred_error),
    ("bound_rhs", |r| r.bound_rhs),
    ("chernoff_min_stat", |r| r.chernoff_min_stat),
    ("chernoff_max_stat", |r| r.chernoff_max_stat),
];

fn cell_key(r: &ReplicationRecord) -> (usize, usize, usize, u64) {
    (r.t, r.n, r.s, r.phi.map_or(u64::MAX, f64::to_bits))
}

/// Aggregate records per `(T, N, s, phi)`, independent of input order.
pub fn summarize(records: &[ReplicationRecord]) -> AppResult<Vec<PointSummary>> {
    if records.is_empty() {
        return Err(AppError::Input(
            "cannot summarize an empty record set".into(),
        ));
    }
    let mut cells: BTreeMap<(usize, usize, usize, u64), Vec<&ReplicationRecord>> = BTreeMap::new();
    for r in records {
        cells.entry(cell_key(r)).or_default().push(r);
    }
    Ok(cells
        .into_values()
        .map(|mut rows| {
            rows.sort_by_key(|r| r.replication_id);
            let first = rows[0];
            let events = FLAGS
                .iter()
                .filter_map(|(name, get)| {
                    let flags: Vec<bool> = rows.iter().filter_map(|r| get(r)).collect();
                    (!flags.is_empty()).then(|| (*name, Frequency::from_flags(flags)))
                })
                .collect();
            let quantiles = VALUES
                .iter()
                .filter_map(|(name, get)| {
                    let vals: Vec<f64> = rows.iter().filter_map(|r| get(r)).collect();
                    (!vals.is_empty()).then(|| (*name, Quantiles::of(vals)))
                })
                .collect();
            PointSummary {
                t: first.t,
                n: first.n,
                s: first.s,
                phi: first.phi,
                replications: rows.len() as u64,
                events,
                quantiles,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: u64, flag: bool, l1: f64) -> ReplicationRecord {
        ReplicationRecord {
            cone_event: Some(flag),
            l1_error: Some(l1),
            ..ReplicationRecord::new(id, 10, 4, 1, id)
        }
    }

    #[test]
    fn single_record() {
        let s = summarize(&[rec(0, true, 2.5)]).unwrap();
        assert_eq!(s[0].events["cone_event"].freq, 1.0);
        let q = s[0].quantiles["l1_error"];
        assert_eq!((q.q25, q.q50, q.q75), (2.5, 2.5, 2.5));
    }

    #[test]
    fn empty_is_error() {
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn quantile_interpolation() {
        let q = Quantiles::of([4.0, 1.0, 3.0, 2.0]);
        assert_eq!((q.q25, q.q50, q.q75), (1.75, 2.5, 3.25));
    }
}
