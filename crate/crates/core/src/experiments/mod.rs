//! Restart experiments: stationary distributions over landscapes and model
//! populations over tasks.

mod export;
mod population;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use export::{write_curve_csv, write_endpoints_csv, write_histogram_csv};
pub use population::{
    learning_curve, run_trajectories, sample_population, select, CurvePoint, ModelPopulation, ModelRecord,
    PopulationConfig, SelectionCriterion,
};

use crate::error::{Error, Result};
use crate::landscapes::{BasinLabel, Landscape, DEFAULT_BASIN_RADIUS};
use crate::optimizers::{OptimizerConfig, OptimizerRegistry};
use crate::params::ParamVector;
use crate::seeding::{derive_seed, stream};

pub const DEFAULT_RESTARTS: usize = 500;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryRunConfig {
    pub optimizer: OptimizerConfig,
    pub restarts: usize,
    pub radius: f64,
    pub master_seed: u64,
}

impl StationaryRunConfig {
    pub fn new(optimizer: OptimizerConfig, master_seed: u64) -> Self {
        Self {
            optimizer,
            restarts: DEFAULT_RESTARTS,
            radius: DEFAULT_BASIN_RADIUS,
            master_seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub params: ParamVector,
    pub label: BasinLabel,
    pub seed: u64,
    pub diverged: bool,
}

/// Endpoint counts per basin, registry order with `Else` last.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasinHistogram {
    pub counts: Vec<(BasinLabel, usize)>,
    pub total: usize,
    /// Trajectories that diverged; they are also counted under `Else`.
    pub diverged: usize,
    pub endpoints: Vec<Endpoint>,
}

impl BasinHistogram {
    pub fn new(labels: Vec<BasinLabel>) -> Self {
        Self {
            counts: labels.into_iter().map(|l| (l, 0)).collect(),
            total: 0,
            diverged: 0,
            endpoints: Vec::new(),
        }
    }

    pub fn add(&mut self, e: Endpoint) -> Result<()> {
        let slot = self
            .counts
            .iter_mut()
            .find(|(l, _)| *l == e.label)
            .ok_or_else(|| Error::arg(format!("label {} not in histogram", e.label)))?;
        slot.1 += 1;
        self.total += 1;
        self.diverged += usize::from(e.diverged);
        self.endpoints.push(e);
        Ok(())
    }

    pub fn count(&self, label: &str) -> usize {
        self.counts
            .iter()
            .find(|(l, _)| l.as_str() == label)
            .map_or(0, |(_, c)| *c)
    }

    pub fn percentages(&self) -> Result<Vec<(BasinLabel, f64)>> {
        if self.total == 0 {
            return Err(Error::EmptyRun);
        }
        Ok(self
            .counts
            .iter()
            .map(|(l, c)| (l.clone(), 100.0 * *c as f64 / self.total as f64))
            .collect())
    }

    pub fn percent(&self, label: &str) -> f64 {
        100.0 * self.count(label) as f64 / self.total.max(1) as f64
    }

    /// `k` endpoints drawn without replacement, kept in run order.
    pub fn export_endpoints<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<Vec<Endpoint>> {
        if k > self.total {
            return Err(Error::arg(format!("cannot export {k} of {} endpoints", self.total)));
        }
        if k == self.total {
            return Ok(self.endpoints.clone());
        }
        let mut idx = sample(rng, self.total, k).into_vec();
        idx.sort_unstable();
        Ok(idx.into_iter().map(|i| self.endpoints[i].clone()).collect())
    }
}

/// Runs `restarts` trajectories from uniform starts and bins their endpoints.
///
/// Restart `i` draws its start point from the stream seeded by
/// `derive_seed(master_seed, i)` and runs the optimizer on the stream seeded
/// by `derive_seed(that, 1)`.
pub fn stationary_distribution(
    landscape: &Landscape,
    run: &StationaryRunConfig,
    registry: &OptimizerRegistry,
) -> Result<BasinHistogram> {
    if run.restarts == 0 {
        return Err(Error::config("restarts must be at least 1"));
    }
    if !(run.radius > 0.0) {
        return Err(Error::config("basin radius must be positive"));
    }
    run.optimizer.validate()?;
    let endpoints = (0..run.restarts as u64)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(run.master_seed, i);
            let w0 = landscape.sample_uniform(&mut stream(seed));
            let mut obj = landscape.clone();
            let t = registry.run_trajectory(&mut obj, &w0, &run.optimizer, derive_seed(seed, 1), run.optimizer.budget_t)?;
            let label = if t.diverged {
                BasinLabel::Else
            } else {
                landscape.classify(&t.endpoint, run.radius)
            };
            Ok(Endpoint {
                params: t.endpoint,
                label,
                seed,
                diverged: t.diverged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut hist = BasinHistogram::new(landscape.basin_labels());
    for e in endpoints {
        hist.add(e)?;
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscapes::LandscapeCatalog;
    use crate::optimizers::AlgorithmKind;

    fn hist(counts: &[(&str, usize)]) -> BasinHistogram {
        let labels = counts
            .iter()
            .map(|(l, _)| match *l {
                "Else" => BasinLabel::Else,
                l => BasinLabel::Minimum(l.into()),
            })
            .collect::<Vec<_>>();
        let mut h = BasinHistogram::new(labels.clone());
        for ((_, c), label) in counts.iter().zip(labels) {
            for _ in 0..*c {
                h.add(Endpoint {
                    params: vec![0.0, 0.0].into(),
                    label: label.clone(),
                    seed: 0,
                    diverged: false,
                })
                .unwrap();
            }
        }
        h
    }

    #[test]
    fn percentages_follow_counts() {
        let h = hist(&[("A", 1), ("Else", 0)]);
        let p = h.percentages().unwrap();
        assert_eq!(p, vec![(BasinLabel::Minimum("A".into()), 100.0), (BasinLabel::Else, 0.0)]);

        let h = hist(&[("GM", 160), ("LM1", 175), ("LM2", 165), ("Else", 0)]);
        let p: Vec<f64> = h.percentages().unwrap().into_iter().map(|x| x.1).collect();
        assert_eq!(p, vec![32.0, 35.0, 33.0, 0.0]);
        assert!((p.iter().sum::<f64>() - 100.0).abs() < 1e-9);

        assert!(matches!(hist(&[("Else", 0)]).percentages(), Err(Error::EmptyRun)));
    }

    #[test]
    fn export_subsets() {
        let h = hist(&[("A", 30), ("B", 20), ("Else", 0)]);
        assert_eq!(h.export_endpoints(50, &mut stream(1)).unwrap(), h.endpoints);
        let a = h.export_endpoints(10, &mut stream(2)).unwrap();
        assert_eq!(a.len(), 10);
        assert_eq!(a, h.export_endpoints(10, &mut stream(2)).unwrap());
        assert!(h.export_endpoints(51, &mut stream(2)).is_err());
    }

    #[test]
    fn single_restart() {
        let l = LandscapeCatalog::builtin().build("himmelblau").unwrap();
        let mut run = StationaryRunConfig::new(OptimizerConfig::new(AlgorithmKind::Gd, 0.0), 3);
        run.restarts = 1;
        let h = stationary_distribution(&l, &run, &OptimizerRegistry::builtin()).unwrap();
        assert_eq!(h.total, 1);
        assert_eq!(h.counts.iter().filter(|(_, c)| *c == 1).count(), 1);
        assert_eq!(h.counts.last().unwrap().0, BasinLabel::Else);
    }

    #[test]
    fn conserved_and_deterministic() {
        let l = LandscapeCatalog::builtin().build("three-hump-camel").unwrap();
        let mut opt = OptimizerConfig::new(AlgorithmKind::Gd, 0.0);
        opt.normalize_gradient = false;
        opt.budget_t = 300;
        let mut run = StationaryRunConfig::new(opt, 8);
        run.restarts = 60;
        let reg = OptimizerRegistry::builtin();
        let a = stationary_distribution(&l, &run, &reg).unwrap();
        let b = stationary_distribution(&l, &run, &reg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.counts.iter().map(|c| c.1).sum::<usize>(), 60);
        // raw steps blow up from the far corners
        assert!(a.diverged > 0 && a.count("Else") >= a.diverged);
        for e in &a.endpoints {
            if !e.diverged {
                assert_eq!(e.label, l.classify(&e.params, run.radius));
            }
        }
    }
}
