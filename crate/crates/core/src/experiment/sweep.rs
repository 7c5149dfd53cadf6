//! Parameter sweeps: repeated scenarios per parameter point, CSV output and
//! paired comparisons between methods.

use std::io;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{mean, paired_t_test, sample_sd, TTestResult};
use super::{generate_scenario, run_scenario, GenerationError, Method, RunError, ScenarioParams, ScenarioResult};

/// How independent scenarios of a sweep are scheduled. Results are
/// identical either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon thread pool; sequential when built without the `parallel` feature.
    #[default]
    Parallel,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SweepError {
    #[error("point {point}, scenario {index}: {source}")]
    Generation {
        point: String,
        index: usize,
        source: GenerationError,
    },
    #[error("point {point}, scenario {index}: {source}")]
    Run {
        point: String,
        index: usize,
        source: RunError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamPoint {
    pub label: String,
    pub params: ScenarioParams,
}

impl ParamPoint {
    /// Point with `total` assistants split 3:2 between humans and robots.
    pub fn with_total_agents(base: &ScenarioParams, total: usize) -> Self {
        let humans = (total * 3 + 2) / 5;
        let robots = total - humans;
        ParamPoint {
            label: format!("m{humans}_n{robots}"),
            params: ScenarioParams {
                num_humans: humans,
                num_robots: robots,
                ..base.clone()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioRun {
    pub scenario_index: usize,
    pub seed: u64,
    pub result: ScenarioResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_total: f64,
    pub sd_total: f64,
    pub vs_dd: Option<TTestResult>,
    pub vs_opt: Option<TTestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub label: String,
    pub runs: Vec<ScenarioRun>,
    pub summary: Vec<MethodSummary>,
}

impl PointResult {
    /// Per-scenario totals of one method, in scenario order.
    pub fn totals(&self, m: Method) -> Vec<f64> {
        self.totals_from(m, 0)
    }

    /// Per-scenario totals skipping each scenario's first `skip` requests.
    pub fn totals_from(&self, m: Method, skip: usize) -> Vec<f64> {
        self.runs
            .iter()
            .map(|r| r.result.totals_from(m, skip).total)
            .collect()
    }

    pub fn summary(&self, m: Method) -> &MethodSummary {
        self.summary
            .iter()
            .find(|s| s.method == m)
            .expect("every method is summarized")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<PointResult>,
}

/// Runs `repetitions` scenarios per point; scenario `i` uses seed
/// `point.params.seed + i`.
pub fn run_sweep(
    points: &[ParamPoint],
    repetitions: usize,
    exec: Execution,
) -> Result<SweepResult, SweepError> {
    let points = points
        .iter()
        .map(|p| run_point(p, repetitions, exec))
        .collect::<Result<_, _>>()?;
    Ok(SweepResult { points })
}

fn run_one(point: &ParamPoint, index: usize) -> Result<ScenarioRun, SweepError> {
    let seed = point.params.seed.wrapping_add(index as u64);
    let params = ScenarioParams {
        seed,
        ..point.params.clone()
    };
    let scenario = generate_scenario(&params).map_err(|source| SweepError::Generation {
        point: point.label.clone(),
        index,
        source,
    })?;
    let result = run_scenario(&scenario).map_err(|source| SweepError::Run {
        point: point.label.clone(),
        index,
        source,
    })?;
    Ok(ScenarioRun {
        scenario_index: index,
        seed,
        result,
    })
}

fn run_point(point: &ParamPoint, repetitions: usize, exec: Execution) -> Result<PointResult, SweepError> {
    let runs: Vec<ScenarioRun> = match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..repetitions)
            .into_par_iter()
            .map(|i| run_one(point, i))
            .collect::<Result<_, _>>()?,
        _ => (0..repetitions)
            .map(|i| run_one(point, i))
            .collect::<Result<_, _>>()?,
    };
    let mut result = PointResult {
        label: point.label.clone(),
        runs,
        summary: Vec::new(),
    };
    result.summary = summarize(&result);
    Ok(result)
}

fn summarize(point: &PointResult) -> Vec<MethodSummary> {
    let dd = point.totals(Method::Dd);
    let opt = point.totals(Method::Opt);
    Method::ALL
        .iter()
        .map(|&m| {
            let xs = point.totals(m);
            let vs = |m_ref: Method, ys: &[f64]| {
                (m != m_ref)
                    .then(|| paired_t_test(&xs, ys).ok())
                    .flatten()
            };
            MethodSummary {
                method: m,
                mean_total: if xs.is_empty() { 0.0 } else { mean(&xs) },
                sd_total: sample_sd(&xs),
                vs_dd: vs(Method::Dd, &dd),
                vs_opt: vs(Method::Opt, &opt),
            }
        })
        .collect()
}

pub const ROWS_HEADER: [&str; 10] = [
    "param_point",
    "scenario_index",
    "seed",
    "method",
    "requests",
    "fulfilled",
    "messages",
    "movement",
    "reward",
    "total",
];

pub const SUMMARY_HEADER: [&str; 8] = [
    "param_point",
    "method",
    "mean_total",
    "sd_total",
    "t_vs_dd",
    "p_vs_dd",
    "t_vs_opt",
    "p_vs_opt",
];

/// One row per (scenario, method), with totals summed over the scenario's requests.
pub fn write_rows_csv<W: io::Write>(sweep: &SweepResult, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(ROWS_HEADER)?;
    for point in &sweep.points {
        for run in &point.runs {
            for m in Method::ALL {
                let t = run.result.totals(m);
                out.write_record([
                    point.label.clone(),
                    run.scenario_index.to_string(),
                    run.seed.to_string(),
                    m.to_string(),
                    t.requests.to_string(),
                    t.fulfilled.to_string(),
                    t.messages.to_string(),
                    t.movement.to_string(),
                    t.reward.to_string(),
                    t.total.to_string(),
                ])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: io::Write>(sweep: &SweepResult, w: W) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SUMMARY_HEADER)?;
    let t_fields = |t: &Option<TTestResult>| match t {
        Some(t) => [t.t.to_string(), t.p_two_tailed.to_string()],
        None => [String::new(), String::new()],
    };
    for point in &sweep.points {
        for s in &point.summary {
            let [t_dd, p_dd] = t_fields(&s.vs_dd);
            let [t_opt, p_opt] = t_fields(&s.vs_opt);
            out.write_record([
                point.label.clone(),
                s.method.to_string(),
                s.mean_total.to_string(),
                s.sd_total.to_string(),
                t_dd,
                p_dd,
                t_opt,
                p_opt,
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
