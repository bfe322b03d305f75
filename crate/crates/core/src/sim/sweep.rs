use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::sim::{run_scenario, Metrics};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub metrics: Option<Metrics>,
    /// Set when the run failed (typically divergence).
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAggregate {
    pub runs: usize,
    /// Share of runs whose convergence time is at or before the deadline.
    pub fraction_converged: f64,
    pub convergence_deadline: f64,
    pub median_rms: Option<f64>,
    pub min_rms: Option<f64>,
    pub max_rms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub runs: Vec<SeedRun>,
    pub aggregate: SweepAggregate,
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    }
}

/// Runs `config` once per seed. Runs are independent; at most `threads` run at once
/// (`None` lets rayon decide).
pub fn seed_sweep(config: &ScenarioConfig, seeds: &[u64], threads: Option<usize>) -> Result<SweepReport> {
    if seeds.is_empty() {
        return Err(Error::validation("a sweep needs at least one seed"));
    }
    let one = |seed: u64| {
        let mut cfg = config.clone();
        cfg.seed = seed;
        match run_scenario(&cfg) {
            Ok((_, metrics)) => SeedRun {
                seed,
                metrics: Some(metrics),
                error: None,
            },
            Err(e) => SeedRun {
                seed,
                metrics: None,
                error: Some(e.to_string()),
            },
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::validation(format!("cannot start worker pool: {e}")))?;
    let runs: Vec<SeedRun> = pool.install(|| seeds.par_iter().map(|&s| one(s)).collect());

    let deadline = config.analysis.convergence_deadline;
    let converged = runs
        .iter()
        .filter(|r| {
            r.metrics
                .as_ref()
                .and_then(|m| m.convergence_time_005)
                .is_some_and(|t| t <= deadline)
        })
        .count();
    let mut rms: Vec<f64> = runs
        .iter()
        .filter_map(|r| r.metrics.as_ref().map(|m| m.cumulative_rms_e))
        .collect();
    rms.sort_by(f64::total_cmp);
    let aggregate = SweepAggregate {
        runs: runs.len(),
        fraction_converged: converged as f64 / runs.len() as f64,
        convergence_deadline: deadline,
        median_rms: median(&rms),
        min_rms: rms.first().copied(),
        max_rms: rms.last().copied(),
    };
    Ok(SweepReport { runs, aggregate })
}
