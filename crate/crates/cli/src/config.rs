//! The JSON run description accepted by every subcommand.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use optpop_core::experiments::DEFAULT_RESTARTS;
use optpop_core::landscapes::{Landscape, LandscapeCatalog, LandscapeSpec, DEFAULT_BASIN_RADIUS};
use optpop_core::optimizers::{
    default_rho, AlgorithmKind, OptimizerConfig, DEFAULT_BUDGET, DEFAULT_EPSILON, DEFAULT_ETA, DEFAULT_TAU,
};
use optpop_core::stats::MwuMode;
use optpop_core::toytask::{make_dataset, DatasetSpec, MetricKind, ToyTask, DEFAULT_TOY_RHO};

use crate::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// One optimizer entry. Unset hyperparameters take the library defaults;
/// an unset `rho` scales with the landscape (or is 0.01 on the toy task).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    pub algorithm: AlgorithmKind,
    /// Row label; defaults to the algorithm label.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub budget_t: Option<usize>,
    #[serde(default)]
    pub tau: Option<usize>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub sam_restore: Option<bool>,
    #[serde(default)]
    pub normalize_gradient: Option<bool>,
}

impl OptimizerSpec {
    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.algorithm.label().to_string())
    }

    pub fn resolve(&self, default_rho: f64) -> Result<OptimizerConfig, CliError> {
        let budget_t = self.budget_t.unwrap_or(DEFAULT_BUDGET);
        let cfg = OptimizerConfig {
            algorithm: self.algorithm,
            eta: self.eta.unwrap_or(DEFAULT_ETA),
            rho: self.rho.unwrap_or(default_rho),
            budget_t,
            tau: self.tau.unwrap_or(DEFAULT_TAU.min(budget_t)),
            epsilon: self.epsilon.unwrap_or(DEFAULT_EPSILON),
            sam_restore: self.sam_restore.unwrap_or(false),
            normalize_gradient: self.normalize_gradient.unwrap_or(true),
        };
        cfg.validate().map_err(|e| CliError::Config(format!("optimizer {}: {e}", self.label())))?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    #[serde(default)]
    pub dataset: DatasetSpec,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub metric: MetricKind,
}

fn default_batch() -> usize {
    16
}

impl Default for TaskSpec {
    fn default() -> Self {
        Self {
            dataset: DatasetSpec::default(),
            batch_size: default_batch(),
            metric: MetricKind::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; when present it must name the subcommand being run.
    #[serde(default)]
    pub command: Option<String>,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub landscape: Option<LandscapeSpec>,
    #[serde(default)]
    pub task: Option<TaskSpec>,
    #[serde(default)]
    pub optimizers: Vec<OptimizerSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_export_k")]
    pub export_k: usize,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default = "default_per_trajectory")]
    pub per_trajectory: usize,
    /// Sampling cadence in gradient evaluations; defaults to 20 for
    /// populations and 1 for curves.
    #[serde(default)]
    pub record_every: Option<usize>,
    #[serde(default = "default_window")]
    pub window: usize,
    /// Optimizer pairs (by row label) for `compare`; all pairs when empty.
    #[serde(default)]
    pub pairs: Vec<(String, String)>,
    #[serde(default)]
    pub mwu_mode: MwuMode,
    #[serde(default = "default_true")]
    pub equal_variance: bool,
    #[serde(default = "default_grid")]
    pub grid_n: usize,
    #[serde(default = "default_gradcheck_points")]
    pub gradcheck_points: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

fn default_restarts() -> usize {
    DEFAULT_RESTARTS
}
fn default_radius() -> f64 {
    DEFAULT_BASIN_RADIUS
}
fn default_export_k() -> usize {
    50
}
fn default_trajectories() -> usize {
    5
}
fn default_per_trajectory() -> usize {
    10
}
fn default_window() -> usize {
    20
}
fn default_true() -> bool {
    true
}
fn default_grid() -> usize {
    100
}
fn default_gradcheck_points() -> usize {
    100
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

/// What population-style commands run on.
pub enum Target {
    Landscape(Landscape),
    Toy(ToyTask),
}

impl Target {
    pub fn default_rho(&self) -> f64 {
        match self {
            Target::Landscape(l) => default_rho(l.domain().diagonal()),
            Target::Toy(_) => DEFAULT_TOY_RHO,
        }
    }

    pub fn name(&self) -> String {
        match self {
            Target::Landscape(l) => l.name().to_string(),
            Target::Toy(_) => "toy".to_string(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn check_command(&self, command: &str) -> Result<(), CliError> {
        match &self.command {
            Some(c) if c != command => Err(CliError::Config(format!(
                "config is for `{c}` but `{command}` was run"
            ))),
            _ => Ok(()),
        }
    }

    pub fn build_landscape(&self, catalog: &LandscapeCatalog) -> Result<Landscape, CliError> {
        let spec = self
            .landscape
            .as_ref()
            .ok_or_else(|| CliError::Config("config needs a `landscape`".into()))?;
        catalog.build_spec(spec).map_err(CliError::from_core)
    }

    pub fn build_target(&self, catalog: &LandscapeCatalog) -> Result<Target, CliError> {
        match (&self.landscape, &self.task) {
            (Some(_), Some(_)) => Err(CliError::Config("give either `landscape` or `task`, not both".into())),
            (Some(_), None) => Ok(Target::Landscape(self.build_landscape(catalog)?)),
            (None, Some(t)) => {
                if t.batch_size == 0 {
                    return Err(CliError::Config("task.batch_size must be positive".into()));
                }
                let ds = make_dataset(&t.dataset).map_err(|e| CliError::Config(format!("task.dataset: {e}")))?;
                if ds.train.is_empty() || ds.test.is_empty() {
                    return Err(CliError::Config("task.dataset needs non-empty train and test splits".into()));
                }
                Ok(Target::Toy(ToyTask::new(ds, t.batch_size, t.metric)))
            }
            (None, None) => Err(CliError::Config("config needs a `landscape` or a `task`".into())),
        }
    }

    /// Resolved optimizers with their row labels; at least `min` required.
    pub fn resolve_optimizers(&self, default_rho: f64, min: usize) -> Result<Vec<(String, OptimizerConfig)>, CliError> {
        if self.optimizers.len() < min {
            return Err(CliError::Config(format!("config needs at least {min} optimizer(s)")));
        }
        let mut out: Vec<(String, OptimizerConfig)> = Vec::new();
        for spec in &self.optimizers {
            let label = spec.label();
            if out.iter().any(|(l, _)| *l == label) {
                return Err(CliError::Config(format!("duplicate optimizer label `{label}`; set `name`")));
            }
            out.push((label, spec.resolve(default_rho)?));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_takes_defaults() {
        let c = ExperimentConfig::default();
        assert_eq!(c.restarts, 500);
        assert_eq!(c.per_trajectory, 10);
        assert_eq!(c.format, OutputFormat::Csv);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"restart": 5}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"optimizers": [{"algorithm": "GD", "lr": 1}]}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"optimizers": [{"algorithm": "Adam"}]}"#).is_err());
    }

    #[test]
    fn optimizer_defaults_resolve() {
        let c = ExperimentConfig::from_json(
            r#"{"landscape": "himmelblau", "optimizers": [{"algorithm": "SAM", "budget_t": 50}]}"#,
        )
        .unwrap();
        let r = c.resolve_optimizers(0.3, 1).unwrap();
        assert_eq!(r[0].0, "SAM");
        assert_eq!((r[0].1.rho, r[0].1.tau, r[0].1.budget_t), (0.3, 50, 50));
        assert!(c.resolve_optimizers(0.3, 2).is_err());
    }

    #[test]
    fn duplicate_labels_need_names() {
        let c = ExperimentConfig::from_json(r#"{"optimizers": [{"algorithm": "GD"}, {"algorithm": "GD"}]}"#).unwrap();
        assert!(c.resolve_optimizers(0.1, 1).is_err());
        let c = ExperimentConfig::from_json(r#"{"optimizers": [{"algorithm": "GD"}, {"algorithm": "GD", "name": "GD-raw"}]}"#)
            .unwrap();
        assert_eq!(c.resolve_optimizers(0.1, 1).unwrap().len(), 2);
    }
}
