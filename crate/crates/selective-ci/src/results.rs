use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// One `(procedure, θ)` cell of a coverage experiment.
///
/// Marginal experiments have no fixed `θ`; they report `NaN` there and a
/// selection log-probability of zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRecord {
    pub scenario_id: String,
    pub procedure: String,
    pub theta: f64,
    pub coverage: f64,
    pub coverage_se: f64,
    pub mean_width: f64,
    pub width_q50: f64,
    pub width_q90: f64,
    pub n_ok: usize,
    pub n_err: usize,
    pub selection_logprob: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRecord {
    pub scenario_id: String,
    pub test: String,
    pub theta: f64,
    pub t: f64,
    pub rejection: f64,
    pub rejection_se: f64,
    pub n_ok: usize,
    pub n_err: usize,
}

/// Quartiles of one component of `η̂`, with an order-statistic 95% band
/// for the median.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercentileRecord {
    pub scenario_id: String,
    pub estimator: String,
    pub theta: f64,
    pub component: usize,
    pub q25: f64,
    pub q50: f64,
    pub q75: f64,
    pub q50_lo: f64,
    pub q50_hi: f64,
    pub n_ok: usize,
    pub n_err: usize,
}

/// Records that count failed replications.
pub trait Cell {
    fn label(&self) -> String;
    fn counts(&self) -> (usize, usize);
}

impl Cell for CoverageRecord {
    fn label(&self) -> String {
        format!("{} / {} at theta = {}", self.scenario_id, self.procedure, self.theta)
    }
    fn counts(&self) -> (usize, usize) {
        (self.n_ok, self.n_err)
    }
}

impl Cell for PowerRecord {
    fn label(&self) -> String {
        format!(
            "{} / {} at theta = {}, t = {}",
            self.scenario_id, self.test, self.theta, self.t
        )
    }
    fn counts(&self) -> (usize, usize) {
        (self.n_ok, self.n_err)
    }
}

impl Cell for PercentileRecord {
    fn label(&self) -> String {
        format!("{} / {} at theta = {}", self.scenario_id, self.estimator, self.theta)
    }
    fn counts(&self) -> (usize, usize) {
        (self.n_ok, self.n_err)
    }
}

/// Largest tolerated share of failed replications in a cell.
pub const MAX_ERROR_RATE: f64 = 0.01;

#[derive(Debug, thiserror::Error)]
#[error("{label}: {n_err} of {total} replications failed (limit {limit}%)", limit = MAX_ERROR_RATE * 100.0)]
pub struct ErrorBudgetExceeded {
    pub label: String,
    pub n_err: usize,
    pub total: usize,
}

/// A table of experiment cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table<T> {
    pub records: Vec<T>,
}

pub type ExperimentResult = Table<CoverageRecord>;
pub type PowerCurve = Table<PowerRecord>;
pub type Percentiles = Table<PercentileRecord>;

impl<T: Serialize + DeserializeOwned> Table<T> {
    pub fn write_csv<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for r in &self.records {
            out.serialize(r)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> csv::Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let records = rdr.deserialize().collect::<csv::Result<Vec<T>>>()?;
        Ok(Self { records })
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

impl<T: Cell> Table<T> {
    /// Fails on the first cell whose error share exceeds [`MAX_ERROR_RATE`].
    pub fn check_errors(&self) -> Result<(), ErrorBudgetExceeded> {
        for r in &self.records {
            let (ok, err) = r.counts();
            let total = ok + err;
            if err as f64 > MAX_ERROR_RATE * total as f64 {
                return Err(ErrorBudgetExceeded {
                    label: r.label(),
                    n_err: err,
                    total,
                });
            }
        }
        Ok(())
    }
}

impl ExperimentResult {
    pub fn find(&self, procedure: &str, theta: f64) -> Option<&CoverageRecord> {
        self.records
            .iter()
            .find(|r| r.procedure == procedure && (r.theta == theta || (r.theta.is_nan() && theta.is_nan())))
    }
}

/// Sample quantile with linear interpolation between order statistics;
/// `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let i = h.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (h - i as f64) * (sorted[j] - sorted[i])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_of_small_sample() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&v, 0.5), 3.0);
        assert_eq!(quantile_sorted(&v, 0.9), 4.6);
        assert_eq!(quantile_sorted(&[7.0], 0.9), 7.0);
    }

    #[test]
    fn error_budget() {
        let rec = |n_err| PowerRecord {
            scenario_id: "s".into(),
            test: "oracle".into(),
            theta: 0.0,
            t: 0.0,
            rejection: 0.05,
            rejection_se: 0.01,
            n_ok: 1000 - n_err,
            n_err,
        };
        assert!(Table { records: vec![rec(10)] }.check_errors().is_ok());
        assert!(Table { records: vec![rec(11)] }.check_errors().is_err());
    }
}
