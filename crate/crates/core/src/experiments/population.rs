use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::Task;
use crate::optimizers::{OptimizerConfig, OptimizerRegistry, Trajectory, TrajectorySample};
use crate::seeding::{derive_seed, stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionCriterion {
    /// SetA
    LowestLoss,
    /// SetB
    HighestMetric,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopulationConfig {
    pub trajectories: usize,
    pub per_trajectory: usize,
    pub criterion: SelectionCriterion,
    pub record_every: usize,
}

impl PopulationConfig {
    pub fn new(trajectories: usize, per_trajectory: usize, criterion: SelectionCriterion) -> Self {
        Self {
            trajectories,
            per_trajectory,
            criterion,
            record_every: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub trajectory: usize,
    pub grad_evals: usize,
    pub loss: f64,
    pub metric: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelPopulation {
    pub config: PopulationConfig,
    pub records: Vec<ModelRecord>,
}

impl ModelPopulation {
    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }

    /// Metrics of all records; records without one are skipped.
    pub fn metrics(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.metric).collect()
    }
}

/// Runs `pop.trajectories` trajectories of `opt` on fresh instances of `task`.
///
/// Trajectory `i` seeds its objective and start point from
/// `derive_seed(master_seed, i)` and its optimizer from `derive_seed(that, 1)`.
pub fn run_trajectories(
    task: &dyn Task,
    opt: &OptimizerConfig,
    pop: &PopulationConfig,
    master_seed: u64,
    registry: &OptimizerRegistry,
) -> Result<Vec<Trajectory>> {
    if pop.trajectories == 0 || pop.per_trajectory == 0 {
        return Err(Error::config("population needs at least one trajectory and one model"));
    }
    (0..pop.trajectories as u64)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(master_seed, i);
            let mut obj = task.instantiate(seed);
            let w0 = task.initial_point(&mut stream(seed));
            registry.run_trajectory(obj.as_mut(), &w0, opt, derive_seed(seed, 1), pop.record_every)
        })
        .collect()
}

fn usable(s: &TrajectorySample, criterion: SelectionCriterion) -> bool {
    match criterion {
        SelectionCriterion::LowestLoss => s.loss.is_finite(),
        SelectionCriterion::HighestMetric => s.metric.is_some_and(f64::is_finite),
    }
}

/// Picks `l` records per trajectory. Ties go to the earlier capture.
pub fn select(trajectories: &[Trajectory], l: usize, criterion: SelectionCriterion) -> Result<Vec<ModelRecord>> {
    let mut out = Vec::with_capacity(trajectories.len() * l);
    for (ti, t) in trajectories.iter().enumerate() {
        let mut pool: Vec<&TrajectorySample> = t.samples.iter().filter(|s| usable(s, criterion)).collect();
        if pool.len() < l {
            return Err(Error::config(format!(
                "trajectory {ti} recorded {} usable models, fewer than the {l} requested",
                pool.len()
            )));
        }
        pool.sort_by(|a, b| {
            let key = match criterion {
                SelectionCriterion::LowestLoss => a.loss.total_cmp(&b.loss),
                SelectionCriterion::HighestMetric => b.metric.unwrap().total_cmp(&a.metric.unwrap()),
            };
            key.then(a.grad_evals.cmp(&b.grad_evals))
        });
        let mut chosen: Vec<&TrajectorySample> = pool.into_iter().take(l).collect();
        chosen.sort_by_key(|s| s.grad_evals);
        out.extend(chosen.into_iter().map(|s| ModelRecord {
            trajectory: ti,
            grad_evals: s.grad_evals,
            loss: s.loss,
            metric: s.metric,
        }));
    }
    Ok(out)
}

pub fn sample_population(
    task: &dyn Task,
    opt: &OptimizerConfig,
    pop: &PopulationConfig,
    master_seed: u64,
    registry: &OptimizerRegistry,
) -> Result<ModelPopulation> {
    let trajectories = run_trajectories(task, opt, pop, master_seed, registry)?;
    Ok(ModelPopulation {
        config: pop.clone(),
        records: select(&trajectories, pop.per_trajectory, pop.criterion)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub grad_evals: usize,
    pub loss: f64,
    pub smoothed_loss: f64,
}

/// Trailing moving average of the recorded losses.
pub fn learning_curve(trajectory: &Trajectory, window: usize) -> Result<Vec<CurvePoint>> {
    if window == 0 {
        return Err(Error::arg("smoothing window must be at least 1"));
    }
    if trajectory.samples.is_empty() {
        return Err(Error::arg("trajectory has no samples"));
    }
    let losses: Vec<f64> = trajectory.samples.iter().map(|s| s.loss).collect();
    let smoothed = moving_average(&losses, window);
    Ok(trajectory
        .samples
        .iter()
        .zip(smoothed)
        .map(|(s, m)| CurvePoint {
            grad_evals: s.grad_evals,
            loss: s.loss,
            smoothed_loss: m,
        })
        .collect())
}

fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    (0..xs.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(window);
            let span = &xs[lo..=i];
            span.iter().sum::<f64>() / span.len() as f64
        })
        .collect()
}
