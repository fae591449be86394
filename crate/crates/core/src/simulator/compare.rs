//! Paired-seed comparison of several controllers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::IntersectionConfig;

use super::arrivals::ArrivalModel;
use super::controller::ControllerSpec;
use super::engine::{simulate, SimMetrics, SimOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub metrics: SimMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerSummary {
    pub name: String,
    pub mean_overall_avg: f64,
    pub mean_overall_max: f64,
    pub mean_throughput: f64,
    pub mean_avg_waiting_per_link: Vec<f64>,
    /// Relative change of `mean_overall_avg` against the baseline, in percent.
    /// Negative means fewer waiting vehicles. `None` when the baseline is zero.
    pub overall_avg_delta_pct: Option<f64>,
    pub overall_max_delta_pct: Option<f64>,
    /// Seeds on which this controller's overall average was at most the baseline's.
    pub seeds_not_worse: usize,
    pub per_seed: Vec<SeedResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub baseline: String,
    pub horizon_s: u64,
    pub seeds: Vec<u64>,
    pub controllers: Vec<ControllerSummary>,
}

impl ComparisonReport {
    pub fn controller(&self, name: &str) -> Option<&ControllerSummary> {
        self.controllers.iter().find(|c| c.name == name)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn delta_pct(value: f64, baseline: f64) -> Option<f64> {
    if baseline == 0.0 {
        (value == 0.0).then_some(0.0)
    } else {
        Some((value - baseline) / baseline * 100.0)
    }
}

/// Runs every controller on every seed. A seed fixes the arrival sequence,
/// so all controllers face exactly the same vehicles.
pub fn compare_controllers(
    cfg: &IntersectionConfig,
    demand: &ArrivalModel,
    controllers: &[ControllerSpec],
    baseline: usize,
    horizon_s: u64,
    seeds: &[u64],
    options: &SimOptions,
) -> Result<ComparisonReport> {
    if controllers.len() < 2 {
        return Err(Error::Validation("comparison needs at least two controllers".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Validation("comparison needs at least one seed".into()));
    }
    if baseline >= controllers.len() {
        return Err(Error::Validation(format!("baseline index {baseline} out of range")));
    }
    for c in controllers {
        c.validate(cfg)?;
    }
    let cells: Vec<(usize, u64)> = (0..controllers.len())
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(c, seed)| {
            let mut controller = controllers[c].build(cfg, seed);
            simulate(cfg, demand, controller.as_mut(), horizon_s, options, seed)
                .map(|run| SeedResult {
                    seed,
                    metrics: run.metrics,
                })
        })
        .collect::<Result<Vec<_>>>()?;

    let per_controller: Vec<&[SeedResult]> = results.chunks(seeds.len()).collect();
    let base = per_controller[baseline];
    let base_avg = mean(base.iter().map(|r| r.metrics.overall_avg));
    let base_max = mean(base.iter().map(|r| r.metrics.overall_max as f64));
    let summaries = controllers
        .iter()
        .zip(&per_controller)
        .map(|(spec, runs)| {
            let n = cfg.num_links;
            let avg = mean(runs.iter().map(|r| r.metrics.overall_avg));
            let max = mean(runs.iter().map(|r| r.metrics.overall_max as f64));
            ControllerSummary {
                name: spec.name.clone(),
                mean_overall_avg: avg,
                mean_overall_max: max,
                mean_throughput: mean(runs.iter().map(|r| r.metrics.throughput_total as f64)),
                mean_avg_waiting_per_link: (0..n)
                    .map(|i| mean(runs.iter().map(|r| r.metrics.avg_waiting_per_link[i])))
                    .collect(),
                overall_avg_delta_pct: delta_pct(avg, base_avg),
                overall_max_delta_pct: delta_pct(max, base_max),
                seeds_not_worse: runs
                    .iter()
                    .zip(base)
                    .filter(|(r, b)| r.metrics.overall_avg <= b.metrics.overall_avg)
                    .count(),
                per_seed: runs.to_vec(),
            }
        })
        .collect();
    Ok(ComparisonReport {
        baseline: controllers[baseline].name.clone(),
        horizon_s,
        seeds: seeds.to_vec(),
        controllers: summaries,
    })
}
