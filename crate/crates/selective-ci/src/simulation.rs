//! Monte Carlo experiments over selective data sets.
//!
//! Every replication draws from its own ChaCha8 stream keyed by
//! `(seed, cell, replication, tag)`, and results are reduced in replication
//! order, so output does not depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use selective_ci_core::{Error, Interval, Level, SelectedDatum, SelectiveMargin, SelectiveModel, TruncatedNormal};

use crate::procedure::Procedure;
use crate::results::{
    quantile_sorted, CoverageRecord, ExperimentResult, PercentileRecord, Percentiles, PowerCurve, PowerRecord, Table,
};
use crate::scenario::Scenario;

/// Tag of the stream that draws the data; procedures use [`Procedure::tag`].
const DATA_TAG: u64 = 0;

pub fn rep_rng(seed: u64, cell: u64, rep: u64, tag: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    for (i, w) in [seed, cell, rep, tag].iter().enumerate() {
        key[8 * i..8 * i + 8].copy_from_slice(&w.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// What one procedure produced in one replication.
pub type Outcome = Result<Interval, Error>;

/// Intervals from every procedure for `n_rep` selective draws at
/// `scenario.theta_values[cell]`, in replication order.
pub fn interval_outcomes(
    scenario: &Scenario,
    procedures: &[Procedure],
    cell: usize,
) -> Result<Vec<Vec<Outcome>>, Error> {
    scenario.validate()?;
    let theta = *scenario.theta_values.get(cell).ok_or_else(|| Error::Domain {
        what: "interval_outcomes",
        reason: format!("no theta value at index {cell}"),
    })?;
    let model = scenario.model()?;
    let tau = scenario.tau()?;
    let level = Level::new(scenario.alpha)?;
    let margin = model.margin();
    let sampler = margin.sampler(theta)?;
    let seed = scenario.seed;
    Ok((0..scenario.n_rep)
        .into_par_iter()
        .map_init(
            || model.margin(),
            |truth, rep| {
                let mut rng = rep_rng(seed, cell as u64, rep as u64, DATA_TAG);
                let datum = match sampler.sample(&mut rng) {
                    Ok(d) => d,
                    Err(e) => return vec![Err(e); procedures.len()],
                };
                procedures
                    .iter()
                    .map(|proc| {
                        let mut r = rep_rng(seed, cell as u64, rep as u64, proc.tag());
                        proc.interval(&datum, &tau, scenario.sigma, level, Some(truth), &mut r)
                    })
                    .collect()
            },
        )
        .collect())
}

fn summarize<'a>(
    scenario_id: &str,
    procedure: &str,
    theta: f64,
    selection_logprob: f64,
    outcomes: impl Iterator<Item = (usize, &'a Outcome, f64)>,
) -> CoverageRecord {
    let mut widths = Vec::new();
    let mut hits = 0usize;
    let mut n_err = 0usize;
    for (rep, o, truth) in outcomes {
        match o {
            Ok(iv) => {
                widths.push(iv.width());
                hits += iv.contains(truth) as usize;
            }
            Err(e) => {
                n_err += 1;
                log::warn!("{scenario_id}: {procedure} failed in replication {rep} (theta = {theta}): {e}");
            }
        }
    }
    let n_ok = widths.len();
    let (coverage, se, mean, q50, q90) = if n_ok == 0 {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    } else {
        let c = hits as f64 / n_ok as f64;
        let mean = widths.iter().sum::<f64>() / n_ok as f64;
        widths.sort_by(f64::total_cmp);
        (
            c,
            (c * (1.0 - c) / n_ok as f64).sqrt(),
            mean,
            quantile_sorted(&widths, 0.5),
            quantile_sorted(&widths, 0.9),
        )
    };
    CoverageRecord {
        scenario_id: scenario_id.to_string(),
        procedure: procedure.to_string(),
        theta,
        coverage,
        coverage_se: se,
        mean_width: mean,
        width_q50: q50,
        width_q90: q90,
        n_ok,
        n_err,
        selection_logprob,
    }
}

/// Selective coverage and width of each procedure at every `θ` of the
/// scenario.
pub fn coverage_width_experiment(scenario: &Scenario, procedures: &[Procedure]) -> Result<ExperimentResult, Error> {
    let margin = scenario.model()?.margin();
    let mut records = Vec::new();
    for (cell, &theta) in scenario.theta_values.iter().enumerate() {
        let lp = margin.selection_log_prob(theta)?.value();
        let reps = interval_outcomes(scenario, procedures, cell)?;
        for (k, proc) in procedures.iter().enumerate() {
            let it = reps.iter().enumerate().map(|(rep, o)| (rep, &o[k], theta));
            records.push(summarize(&scenario.id, proc.name(), theta, lp, it));
        }
    }
    Ok(Table { records })
}

/// Coverage averaged over which group wins.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalOutcome {
    pub result: ExperimentResult,
    /// How often each group had the largest draw.
    pub selection_counts: Vec<usize>,
}

/// Draws all `p + 1` outcomes unconditionally, selects the largest and
/// builds each interval for its mean.
pub fn marginal_coverage_experiment(
    scenario_id: &str,
    procedures: &[Procedure],
    means: &[f64],
    scales: &[f64],
    alpha: f64,
    n_rep: usize,
    seed: u64,
) -> Result<MarginalOutcome, Error> {
    let level = Level::new(alpha)?;
    let k = means.len();
    if k < 2 || scales.len() != k || n_rep == 0 {
        return Err(Error::Domain {
            what: "marginal_coverage_experiment",
            reason: "need at least two groups, one scale per group and n_rep ≥ 1".into(),
        });
    }
    let laws = means
        .iter()
        .zip(scales)
        .map(|(m, s)| TruncatedNormal::untruncated(*m, *s))
        .collect::<Result<Vec<_>, _>>()?;
    let needs_truth = procedures.iter().any(Procedure::needs_truth);
    let reps: Vec<(usize, Vec<Outcome>)> = (0..n_rep)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rep_rng(seed, 0, rep as u64, DATA_TAG);
            let z: Vec<f64> = match laws.iter().map(|l| l.sample(&mut rng)).collect() {
                Ok(z) => z,
                Err(e) => return (usize::MAX, vec![Err(e); procedures.len()]),
            };
            let s = (0..k).fold(0, |b, j| if z[j] > z[b] { j } else { b });
            let others = |v: &[f64]| -> Vec<f64> { (0..k).filter(|&j| j != s).map(|j| v[j]).collect() };
            let datum = SelectedDatum { x: others(&z), y: z[s] };
            let tau = others(scales);
            let truth = if needs_truth {
                SelectiveModel::new(others(means), tau.clone(), scales[s])
                    .map(|m| m.margin())
                    .ok()
            } else {
                None
            };
            let out = procedures
                .iter()
                .map(|proc| {
                    let mut r = rep_rng(seed, 0, rep as u64, proc.tag());
                    proc.interval(&datum, &tau, scales[s], level, truth.as_ref(), &mut r)
                })
                .collect();
            (s, out)
        })
        .collect();
    let mut selection_counts = vec![0; k];
    for (s, _) in &reps {
        if let Some(c) = selection_counts.get_mut(*s) {
            *c += 1;
        }
    }
    let records = procedures
        .iter()
        .enumerate()
        .map(|(j, proc)| {
            let it = reps
                .iter()
                .enumerate()
                .map(|(rep, (s, o))| (rep, &o[j], means.get(*s).copied().unwrap_or(f64::NAN)));
            summarize(scenario_id, proc.name(), f64::NAN, 0.0, it)
        })
        .collect();
    Ok(MarginalOutcome {
        result: Table { records },
        selection_counts,
    })
}

/// Rejection rates of the equal-tailed test of `θ₀ = t` for every true
/// `θ` in the scenario and every `t` in `t_grid`.
///
/// A test is given by a procedure with an `η` estimator (the oracle uses
/// the true `η`). `Y` is rejected when it falls outside
/// `[l(t, η̂), u(t, η̂)]`.
pub fn power_curve(scenario: &Scenario, tests: &[Procedure], t_grid: &[f64]) -> Result<PowerCurve, Error> {
    scenario.validate()?;
    let truth = scenario.eta()?;
    let tau = scenario.tau()?;
    let sigma = scenario.sigma;
    let a = 0.5 * scenario.alpha;
    let estimators = tests
        .iter()
        .map(|t| {
            t.estimator(&truth).ok_or_else(|| Error::Domain {
                what: "power_curve",
                reason: format!("{} does not define a test of a single theta", t.name()),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let margin = scenario.model()?.margin();
    let mut records = Vec::new();
    for (cell, &theta) in scenario.theta_values.iter().enumerate() {
        let sampler = margin.sampler(theta)?;
        let reps: Vec<Vec<Result<Vec<bool>, Error>>> = (0..scenario.n_rep)
            .into_par_iter()
            .map(|rep| {
                let mut rng = rep_rng(scenario.seed, cell as u64, rep as u64, DATA_TAG);
                let datum = match sampler.sample(&mut rng) {
                    Ok(d) => d,
                    Err(e) => return vec![Err(e); tests.len()],
                };
                let reject = |f: f64| !(f > a && f < 1.0 - a);
                tests
                    .iter()
                    .zip(&estimators)
                    .map(|(test, est)| {
                        let mut r = rep_rng(scenario.seed, cell as u64, rep as u64, test.tag());
                        if est.depends_on_theta() {
                            t_grid
                                .iter()
                                .map(|&t| {
                                    let eta = est.estimate(&datum, &tau, sigma, t, &mut r)?;
                                    let m = SelectiveModel::new(eta, tau.clone(), sigma)?;
                                    Ok(reject(m.marginal_cdf(t, datum.y)?))
                                })
                                .collect()
                        } else {
                            let eta = est.estimate(&datum, &tau, sigma, datum.y, &mut r)?;
                            let m = SelectiveModel::new(eta, tau.clone(), sigma)?.margin();
                            t_grid.iter().map(|&t| Ok(reject(m.cdf(t, datum.y)?))).collect()
                        }
                    })
                    .collect()
            })
            .collect();
        for (k, test) in tests.iter().enumerate() {
            for (ti, &t) in t_grid.iter().enumerate() {
                let (mut hits, mut n_ok, mut n_err) = (0usize, 0usize, 0usize);
                for (rep, r) in reps.iter().enumerate() {
                    match &r[k] {
                        Ok(v) => {
                            n_ok += 1;
                            hits += v[ti] as usize;
                        }
                        Err(e) => {
                            if ti == 0 {
                                log::warn!(
                                    "{}: {} failed in replication {rep} (theta = {theta}): {e}",
                                    scenario.id,
                                    test.name()
                                );
                            }
                            n_err += 1;
                        }
                    }
                }
                let rate = hits as f64 / n_ok as f64;
                records.push(PowerRecord {
                    scenario_id: scenario.id.clone(),
                    test: test.name().to_string(),
                    theta,
                    t,
                    rejection: rate,
                    rejection_se: (rate * (1.0 - rate) / n_ok as f64).sqrt(),
                    n_ok,
                    n_err,
                });
            }
        }
    }
    Ok(Table { records })
}

/// Quartiles of each component of `η̂` under `P_{η,θ}` for every `θ` in the
/// scenario. Estimators that depend on a hypothesised value are evaluated at
/// `theta0`; the oracle stands for the fixed, known `η`.
pub fn estimator_percentiles(scenario: &Scenario, estimators: &[Procedure], theta0: f64) -> Result<Percentiles, Error> {
    scenario.validate()?;
    let truth = scenario.eta()?;
    let tau = scenario.tau()?;
    let ests = estimators
        .iter()
        .map(|e| {
            e.estimator(&truth).ok_or_else(|| Error::Domain {
                what: "estimator_percentiles",
                reason: format!("{} is not an estimator of eta", e.name()),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let margin = scenario.model()?.margin();
    let p = scenario.p;
    let mut records = Vec::new();
    for (cell, &theta) in scenario.theta_values.iter().enumerate() {
        let sampler = margin.sampler(theta)?;
        let reps: Vec<Vec<Result<Vec<f64>, Error>>> = (0..scenario.n_rep)
            .into_par_iter()
            .map(|rep| {
                let mut rng = rep_rng(scenario.seed, cell as u64, rep as u64, DATA_TAG);
                let datum = match sampler.sample(&mut rng) {
                    Ok(d) => d,
                    Err(e) => return vec![Err(e); ests.len()],
                };
                estimators
                    .iter()
                    .zip(&ests)
                    .map(|(proc, est)| {
                        let mut r = rep_rng(scenario.seed, cell as u64, rep as u64, proc.tag());
                        est.estimate(&datum, &tau, scenario.sigma, theta0, &mut r)
                    })
                    .collect()
            })
            .collect();
        for (k, proc) in estimators.iter().enumerate() {
            let label = if matches!(proc, Procedure::Oracle) {
                "fixed"
            } else {
                proc.name()
            };
            let ok: Vec<&Vec<f64>> = reps.iter().filter_map(|r| r[k].as_ref().ok()).collect();
            let n_err = reps.len() - ok.len();
            if n_err > 0 {
                log::warn!(
                    "{}: {label} failed in {n_err} replications (theta = {theta})",
                    scenario.id
                );
            }
            for j in 0..p {
                let mut v: Vec<f64> = ok.iter().map(|e| e[j]).collect();
                v.sort_by(f64::total_cmp);
                let (q25, q50, q75, lo, hi) = if v.is_empty() {
                    (f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN)
                } else {
                    let n = v.len() as f64;
                    let half = 1.96 * n.sqrt() / 2.0;
                    let rank = |r: f64| v[(r.round().max(0.0) as usize).min(v.len() - 1)];
                    (
                        quantile_sorted(&v, 0.25),
                        quantile_sorted(&v, 0.5),
                        quantile_sorted(&v, 0.75),
                        rank(n / 2.0 - half - 1.0),
                        rank(n / 2.0 + half),
                    )
                };
                records.push(PercentileRecord {
                    scenario_id: scenario.id.clone(),
                    estimator: label.to_string(),
                    theta,
                    component: j,
                    q25,
                    q50,
                    q75,
                    q50_lo: lo,
                    q50_hi: hi,
                    n_ok: ok.len(),
                    n_err,
                });
            }
        }
    }
    Ok(Table { records })
}

/// Draws of the data alone, for callers that build their own statistics.
pub fn selective_draws(scenario: &Scenario, cell: usize) -> Result<Vec<SelectedDatum>, Error> {
    let theta = scenario.theta_values[cell];
    let margin: SelectiveMargin = scenario.model()?.margin();
    let sampler = margin.sampler(theta)?;
    (0..scenario.n_rep)
        .into_par_iter()
        .map(|rep| sampler.sample(&mut rep_rng(scenario.seed, cell as u64, rep as u64, DATA_TAG)))
        .collect()
}
