//! Batch execution of an experiment and its aggregate report.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Problem};
use super::seeds::derive_run_seed;
use crate::environment::{GaussianSimulator, RunRecord, Simulator};
use crate::error::{Error, Result};
use crate::geometry::{bound_gaussian, bound_theorem1, bound_theorem3, bound_theorem4, elliptical_potential_bound, lemma3_ratio_bound};
use crate::model::ModelKind;

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "TS_BANDIT_WORKERS";

/// Slack on estimated Gaussian ratios beyond their three-standard-error band.
pub const GAUSSIAN_RATIO_TOL: f64 = 1e-6;

/// Workers from `TS_BANDIT_WORKERS`, else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbortedRun {
    pub run: usize,
    pub seed: u64,
    pub error: String,
}

/// A bound evaluated at every horizon `t = 1..=T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub name: String,
    pub values: Vec<f64>,
}

/// One pass/fail row of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub name: String,
    pub passed: bool,
    /// Largest observed left-hand side.
    pub observed: f64,
    pub limit: f64,
    /// Smallest `limit - observed` seen.
    pub slack: f64,
    pub evaluated: usize,
    pub violations: usize,
}

impl CheckRow {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            passed: true,
            observed: f64::NEG_INFINITY,
            limit: f64::NAN,
            slack: f64::INFINITY,
            evaluated: 0,
            violations: 0,
        }
    }

    fn record(&mut self, lhs: f64, rhs: f64, holds: bool) {
        self.evaluated += 1;
        if rhs - lhs < self.slack {
            self.slack = rhs - lhs;
            self.observed = lhs;
            self.limit = rhs;
        }
        if !holds {
            self.violations += 1;
            self.passed = false;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub runs: usize,
    pub completed: usize,
    pub aborted: Vec<AbortedRun>,
    pub horizon: usize,
    pub master_seed: u64,
    pub mean_cum_regret: Vec<f64>,
    pub se_cum_regret: Vec<f64>,
    pub final_mean_regret: f64,
    pub final_se: f64,
    pub bounds: Vec<BoundCurve>,
    pub checks: Vec<CheckRow>,
}

impl AggregateReport {
    pub fn all_passed(&self) -> bool {
        self.aborted.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckRow> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    /// Per-run outcome in run-index order.
    pub runs: Vec<std::result::Result<RunRecord, String>>,
    pub report: AggregateReport,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with_workers(cfg, worker_count())
}

pub fn run_experiment_with_workers(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentResult> {
    let problem = cfg.problem()?;
    let adversary = cfg.adversary.build();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Numeric(format!("thread pool: {e}")))?;
    let seeds: Vec<u64> = (0..cfg.runs as u64).map(|i| derive_run_seed(cfg.master_seed, i)).collect();
    let runs: Vec<std::result::Result<RunRecord, String>> = match &problem {
        Problem::Discrete { grid, model } => {
            let sim = Simulator::new(grid.clone(), model.clone())?;
            pool.install(|| {
                seeds
                    .par_iter()
                    .map(|s| sim.run(&adversary, cfg.horizon, *s, cfg.diagnostics).map_err(|e| e.to_string()))
                    .collect()
            })
        }
        Problem::Gaussian {
            model,
            prior_scale,
            ratio_draws,
        } => {
            let sim = GaussianSimulator::new(model.clone(), *prior_scale)?.with_ratio_draws(*ratio_draws);
            pool.install(|| {
                seeds
                    .par_iter()
                    .map(|s| sim.run(&adversary, cfg.horizon, *s, cfg.diagnostics).map_err(|e| e.to_string()))
                    .collect()
            })
        }
    };
    let report = aggregate(cfg, &problem, &runs, &seeds);
    Ok(ExperimentResult { runs, report })
}

fn aggregate(
    cfg: &ExperimentConfig,
    problem: &Problem,
    runs: &[std::result::Result<RunRecord, String>],
    seeds: &[u64],
) -> AggregateReport {
    let horizon = cfg.horizon;
    let mut aborted = Vec::new();
    let mut sum = vec![0.0; horizon];
    let mut sum_sq = vec![0.0; horizon];
    let mut completed = 0usize;
    let mut checks: Vec<CheckRow> = Vec::new();
    let model = problem.model();
    let (k, d) = (model.n_actions() as f64, model.dim() as f64);
    let ellip = match problem {
        Problem::Gaussian { prior_scale, .. } => Some(elliptical_potential_bound(
            d,
            horizon as f64,
            *prior_scale,
            model.features().map_or(0.0, |f| f.max_norm()),
            model.noise_std().unwrap_or(1.0),
        )),
        Problem::Discrete { .. } => None,
    };
    for (i, run) in runs.iter().enumerate() {
        let rec = match run {
            Ok(r) => r,
            Err(e) => {
                aborted.push(AbortedRun {
                    run: i,
                    seed: seeds[i],
                    error: e.clone(),
                });
                continue;
            }
        };
        completed += 1;
        let mut potential = 0.0;
        for (t, r) in rec.rounds.iter().enumerate() {
            sum[t] += r.cum_regret;
            sum_sq[t] += r.cum_regret * r.cum_regret;
            if let Some(diag) = &r.diagnostics {
                for c in &diag.bound_checks {
                    row(&mut checks, &format!("round_{}", c.name)).record(c.lhs, c.rhs, c.holds);
                }
            }
            if let Some(g) = &r.gaussian {
                potential += g.potential;
                if let Some(est) = &g.ratio_estimate {
                    let limit = lemma3_ratio_bound(d, k);
                    let lhs = est.ratio - 3.0 * est.ratio_se;
                    row(&mut checks, "round_lemma3_ratio").record(lhs, limit, lhs <= limit + GAUSSIAN_RATIO_TOL);
                }
            }
        }
        if let (Some(bound), true) = (ellip, cfg.diagnostics) {
            row(&mut checks, "elliptical_potential").record(potential, bound, potential <= bound);
        }
    }
    let m = completed.max(1) as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / m).collect();
    let se: Vec<f64> = sum
        .iter()
        .zip(&sum_sq)
        .map(|(s, q)| {
            if completed < 2 {
                0.0
            } else {
                let var = ((q - s * s / m) / (m - 1.0)).max(0.0);
                (var / m).sqrt()
            }
        })
        .collect();
    let bounds = bound_curves(problem, horizon);
    let (final_mean, final_se) = (mean.last().copied().unwrap_or(0.0), se.last().copied().unwrap_or(0.0));
    for b in &bounds {
        let limit = b.values.last().copied().unwrap_or(0.0);
        let lhs = final_mean + 3.0 * final_se;
        let mut r = CheckRow::new(&format!("final_regret_le_{}", b.name));
        r.record(lhs, limit, lhs <= limit);
        checks.push(r);
    }
    AggregateReport {
        runs: runs.len(),
        completed,
        aborted,
        horizon,
        master_seed: cfg.master_seed,
        mean_cum_regret: mean,
        se_cum_regret: se,
        final_mean_regret: final_mean,
        final_se,
        bounds,
        checks,
    }
}

fn row<'a>(rows: &'a mut Vec<CheckRow>, name: &str) -> &'a mut CheckRow {
    match rows.iter().position(|r| r.name == name) {
        Some(i) => &mut rows[i],
        None => {
            rows.push(CheckRow::new(name));
            rows.last_mut().expect("just pushed")
        }
    }
}

fn bound_curves(problem: &Problem, horizon: usize) -> Vec<BoundCurve> {
    let model = problem.model();
    let k = model.n_actions() as f64;
    let ts = (1..=horizon).map(|t| t as f64);
    match problem {
        Problem::Discrete { grid, .. } => {
            let h = grid.prior_entropy();
            let n = grid.len() as f64;
            let mut out = vec![
                BoundCurve {
                    name: "theorem1".into(),
                    values: ts.clone().map(|t| bound_theorem1(2.0 * k, t, h)).collect(),
                },
                BoundCurve {
                    name: "theorem3".into(),
                    values: ts.clone().map(|t| bound_theorem3(k, t, n)).collect(),
                },
            ];
            if model.kind() == ModelKind::LogisticLinear {
                let d = model.dim() as f64;
                let (s, c) = (grid.radius(), model.lipschitz_constant().unwrap_or(0.0));
                out.push(BoundCurve {
                    name: "theorem4".into(),
                    values: ts.map(|t| bound_theorem4(k, t, d, s, c)).collect(),
                });
            }
            out
        }
        Problem::Gaussian { prior_scale, .. } => {
            let d = model.dim() as f64;
            let b = model.features().map_or(0.0, |f| f.max_norm());
            let sigma = model.noise_std().unwrap_or(1.0);
            vec![BoundCurve {
                name: "gaussian".into(),
                values: ts.map(|t| bound_gaussian(d, t, k, *prior_scale, b, sigma)).collect(),
            }]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(runs: usize, diagnostics: bool) -> ExperimentConfig {
        let text = format!(
            r#"{{
  "model": {{ "kind": "tabular_bernoulli", "random": {{ "n_atoms": 6, "n_contexts": 2, "n_actions": 3, "seed": 4 }} }},
  "horizon": 30,
  "runs": {runs},
  "master_seed": 11,
  "diagnostics": {diagnostics}
}}"#
        );
        ExperimentConfig::from_str_at(&text, "inline").unwrap()
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let c = cfg(12, true);
        let one = run_experiment_with_workers(&c, 1).unwrap();
        let three = run_experiment_with_workers(&c, 3).unwrap();
        assert_eq!(one.report, three.report);
        assert_eq!(one.runs, three.runs);
        assert!(one.report.all_passed(), "{:?}", one.report.checks);
        assert!(one.report.check("round_lemma6").unwrap().evaluated == 12 * 30);
    }

    #[test]
    fn standard_error_matches_direct_formula() {
        let res = run_experiment_with_workers(&cfg(20, false), 2).unwrap();
        let finals: Vec<f64> = res.runs.iter().map(|r| r.as_ref().unwrap().final_regret()).collect();
        let m = finals.len() as f64;
        let mean = finals.iter().sum::<f64>() / m;
        let var = finals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        assert!((res.report.final_mean_regret - mean).abs() < 1e-12);
        assert!((res.report.final_se - (var / m).sqrt()).abs() < 1e-9);
    }
}
