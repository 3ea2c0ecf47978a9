//! The eight optimizers behind a common [`Optimizer`] trait, plus the
//! trajectory driver with gradient-evaluation budgeting.

mod config;
mod steps;

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

pub use config::{
    default_rho, AlgorithmKind, OptimizerConfig, Perturb, DEFAULT_BUDGET, DEFAULT_EPSILON, DEFAULT_ETA, DEFAULT_TAU,
};
pub use steps::{
    local_search, perturb_gradient, perturb_model, sample_ball, step_gd, step_nig, step_nig_with, step_nim, step_sam,
};

use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::params::{norm, ParamVector};
use crate::seeding::{stream, StreamRng};

/// Iterates farther than this from the origin count as diverged.
pub const DIVERGENCE_NORM: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetCounter {
    pub used: usize,
    pub cap: usize,
}

impl BudgetCounter {
    pub fn new(cap: usize) -> Self {
        Self { used: 0, cap }
    }

    pub fn remaining(&self) -> usize {
        self.cap.saturating_sub(self.used)
    }

    pub fn charge(&mut self, n: usize) {
        self.used += n;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub grad_evals: usize,
    pub params: ParamVector,
    pub loss: f64,
    pub metric: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BhStats {
    pub hops: usize,
    pub accepted: usize,
    /// f(Y₀) followed by the loss of every accepted hop.
    pub accepted_losses: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub config: OptimizerConfig,
    pub samples: Vec<TrajectorySample>,
    pub endpoint: ParamVector,
    pub total_grad_evals: usize,
    pub updates: usize,
    pub diverged: bool,
    pub bh: Option<BhStats>,
}

impl Trajectory {
    pub fn final_loss(&self) -> f64 {
        self.samples.last().map_or(f64::NAN, |s| s.loss)
    }
}

/// Budget, update count and the sample log of a running trajectory.
#[derive(Debug)]
pub struct Recorder {
    budget: BudgetCounter,
    record_every: usize,
    next_record: usize,
    updates: usize,
    samples: Vec<TrajectorySample>,
}

impl Recorder {
    pub fn new(cap: usize, record_every: usize) -> Self {
        Self {
            budget: BudgetCounter::new(cap),
            record_every: record_every.max(1),
            next_record: 0,
            updates: 0,
            samples: Vec::new(),
        }
    }

    pub fn budget(&self) -> BudgetCounter {
        self.budget
    }

    pub fn remaining(&self) -> usize {
        self.budget.remaining()
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn charge(&mut self, n: usize) {
        self.budget.charge(n);
    }

    fn push(&mut self, obj: &dyn Objective, w: &[f64]) {
        self.samples.push(TrajectorySample {
            grad_evals: self.budget.used,
            params: w.to_vec().into(),
            loss: obj.loss(w),
            metric: obj.metric(w),
        });
        self.next_record = (self.budget.used / self.record_every + 1) * self.record_every;
    }

    /// Records the starting point at zero evaluations.
    pub fn start(&mut self, obj: &dyn Objective, w: &[f64]) -> Result<()> {
        check(w)?;
        self.push(obj, w);
        Ok(())
    }

    /// Registers one parameter update; records it when a checkpoint is due.
    pub fn update(&mut self, obj: &dyn Objective, w: &[f64]) -> Result<()> {
        self.updates += 1;
        check(w)?;
        if self.budget.used >= self.next_record {
            self.push(obj, w);
        }
        Ok(())
    }

    fn finish(&mut self, obj: &dyn Objective, endpoint: &[f64]) {
        if self.samples.last().is_some_and(|s| s.grad_evals == self.budget.used) {
            self.samples.pop();
        }
        self.push(obj, endpoint);
    }
}

fn check(w: &[f64]) -> Result<()> {
    if w.iter().all(|x| x.is_finite()) && norm(w) <= DIVERGENCE_NORM {
        Ok(())
    } else {
        Err(Error::Diverged { params: w.to_vec() })
    }
}

/// What an optimizer hands back besides its recorded samples.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub endpoint: Vec<f64>,
    pub bh: Option<BhStats>,
}

pub trait Optimizer: Send + Sync {
    fn name(&self) -> &str;

    /// Runs until the recorder's budget no longer admits a step.
    fn run(
        &self,
        obj: &mut dyn Objective,
        w0: &[f64],
        cfg: &OptimizerConfig,
        rng: &mut StreamRng,
        rec: &mut Recorder,
    ) -> Result<Outcome>;
}

#[derive(Clone, Copy, Debug)]
enum Rule {
    Gd,
    Nig,
    Nim,
    Sam,
}

/// GD and its single-iterate noisy variants.
#[derive(Debug)]
pub struct Descent {
    name: &'static str,
    rule: Rule,
}

impl Optimizer for Descent {
    fn name(&self) -> &str {
        self.name
    }

    fn run(
        &self,
        obj: &mut dyn Objective,
        w0: &[f64],
        cfg: &OptimizerConfig,
        rng: &mut StreamRng,
        rec: &mut Recorder,
    ) -> Result<Outcome> {
        let cost = if matches!(self.rule, Rule::Sam) { 2 } else { 1 };
        let mut w = w0.to_vec();
        while rec.remaining() >= cost {
            let t = rec.updates() + 1;
            let (next, used) = match self.rule {
                Rule::Gd => step_gd(obj, &w, cfg)?,
                Rule::Nig => step_nig(obj, &w, cfg, rng)?,
                Rule::Nim => step_nim(obj, &w, t, cfg, rng)?,
                Rule::Sam => step_sam(obj, &w, cfg)?,
            };
            rec.charge(used);
            w = next;
            rec.update(obj, &w)?;
        }
        Ok(Outcome { endpoint: w, bh: None })
    }
}

/// Basin hopping: local search, then hop by perturbing either the model or
/// the gradient, then local search again; optionally monotonic.
#[derive(Debug)]
pub struct BasinHopping {
    name: &'static str,
    perturb: Perturb,
    monotonic: bool,
}

impl Optimizer for BasinHopping {
    fn name(&self) -> &str {
        self.name
    }

    fn run(
        &self,
        obj: &mut dyn Objective,
        w0: &[f64],
        cfg: &OptimizerConfig,
        rng: &mut StreamRng,
        rec: &mut Recorder,
    ) -> Result<Outcome> {
        let mut stats = BhStats::default();
        let mut y = search(obj, w0, cfg, rec)?;
        let mut fy = obj.loss(&y);
        stats.accepted_losses.push(fy);
        while rec.remaining() > 0 {
            let x = match self.perturb {
                Perturb::Model => perturb_model(&y, cfg.rho, rng),
                Perturb::Gradient => {
                    let e = steps::eval(obj, &y)?;
                    rec.charge(1);
                    let g = perturb_gradient(&e.gradient, cfg.rho, rng);
                    let x = steps::descend(&y, &g, cfg);
                    rec.update(obj, &x)?;
                    x
                }
            };
            let cand = search(obj, &x, cfg, rec)?;
            let fc = obj.loss(&cand);
            stats.hops += 1;
            if !self.monotonic || fc < fy {
                y = cand;
                fy = fc;
                stats.accepted += 1;
                stats.accepted_losses.push(fy);
            }
        }
        Ok(Outcome { endpoint: y, bh: Some(stats) })
    }
}

/// Local search within the remaining budget, recording every update.
fn search(obj: &mut dyn Objective, x: &[f64], cfg: &OptimizerConfig, rec: &mut Recorder) -> Result<Vec<f64>> {
    let cap = rec.remaining();
    let mut steps = 0;
    let (y, used) = local_search(obj, x, cfg, cap, &mut |o, w| {
        steps += 1;
        rec.charge(1);
        rec.update(o, w)
    })?;
    // the evaluation that found a flat gradient produced no update
    rec.charge(used - steps);
    Ok(y)
}

/// Name-indexed set of optimizers.
#[derive(Clone, Default)]
pub struct OptimizerRegistry {
    entries: HashMap<String, Arc<dyn Optimizer>>,
    order: Vec<String>,
}

impl OptimizerRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        for kind in AlgorithmKind::ALL {
            let name = kind.label();
            let opt: Arc<dyn Optimizer> = match kind {
                AlgorithmKind::Gd => Arc::new(Descent { name, rule: Rule::Gd }),
                AlgorithmKind::Nig => Arc::new(Descent { name, rule: Rule::Nig }),
                AlgorithmKind::Nim => Arc::new(Descent { name, rule: Rule::Nim }),
                AlgorithmKind::Sam => Arc::new(Descent { name, rule: Rule::Sam }),
                AlgorithmKind::Bh { perturb, monotonic } => Arc::new(BasinHopping {
                    name,
                    perturb,
                    monotonic,
                }),
            };
            r.register(opt);
        }
        r
    }

    /// Adds an optimizer, replacing any existing one of the same name.
    pub fn register(&mut self, opt: Arc<dyn Optimizer>) {
        let name = opt.name().to_string();
        if self.entries.insert(name.clone(), opt).is_none() {
            self.order.push(name);
        }
    }

    pub fn names(&self) -> &[String] {
        &self.order
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Optimizer>> {
        self.entries.get(name).cloned().ok_or_else(|| Error::Unknown {
            kind: "optimizer",
            name: name.to_string(),
        })
    }

    /// Runs one trajectory from `w0`. Divergence does not fail the call; the
    /// trajectory comes back truncated and flagged instead.
    pub fn run_trajectory(
        &self,
        obj: &mut dyn Objective,
        w0: &[f64],
        cfg: &OptimizerConfig,
        seed: u64,
        record_every: usize,
    ) -> Result<Trajectory> {
        cfg.validate()?;
        if w0.len() != obj.dim() {
            return Err(Error::Dimension {
                expected: obj.dim(),
                got: w0.len(),
            });
        }
        let opt = self.get(cfg.algorithm.label())?;
        let mut rng = stream(seed);
        let mut rec = Recorder::new(cfg.budget_t, record_every);
        rec.start(&*obj, w0)?;
        let (endpoint, bh, diverged) = match opt.run(obj, w0, cfg, &mut rng, &mut rec) {
            Ok(out) => (out.endpoint, out.bh, false),
            Err(Error::Diverged { params }) => (params, None, true),
            Err(e) => return Err(e),
        };
        rec.finish(&*obj, &endpoint);
        Ok(Trajectory {
            seed,
            config: cfg.clone(),
            samples: rec.samples,
            endpoint: endpoint.into(),
            total_grad_evals: rec.budget.used,
            updates: rec.updates,
            diverged,
            bh,
        })
    }
}

fn builtin_registry() -> &'static OptimizerRegistry {
    static REG: OnceLock<OptimizerRegistry> = OnceLock::new();
    REG.get_or_init(OptimizerRegistry::builtin)
}

/// [`OptimizerRegistry::run_trajectory`] on the built-in registry.
pub fn run_trajectory(
    obj: &mut dyn Objective,
    w0: &[f64],
    cfg: &OptimizerConfig,
    seed: u64,
    record_every: usize,
) -> Result<Trajectory> {
    builtin_registry().run_trajectory(obj, w0, cfg, seed, record_every)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscapes::{Landscape, LandscapeCatalog};
    use crate::seeding::child_stream;
    use proptest::prelude::*;

    fn land(name: &str) -> Landscape {
        LandscapeCatalog::builtin().build(name).unwrap()
    }

    fn cfg(kind: AlgorithmKind, rho: f64) -> OptimizerConfig {
        OptimizerConfig::new(kind, rho)
    }

    #[test]
    fn gd_settles_in_nearby_basin() {
        let mut l = land("himmelblau");
        let mut c = cfg(AlgorithmKind::Gd, 0.0);
        c.normalize_gradient = false;
        let t = run_trajectory(&mut l, &[3.1, 2.1], &c, 0, 10).unwrap();
        assert!(t.endpoint.distance(&[3.0, 2.0]) < 1e-3);
        assert_eq!(t.updates, 2000);
        assert!(!t.diverged);
    }

    #[test]
    fn sam_makes_half_as_many_updates() {
        let mut l = land("six-hump-camel");
        for budget in [100, 101, 2000] {
            let mut c = cfg(AlgorithmKind::Sam, 0.05);
            c.budget_t = budget;
            let t = run_trajectory(&mut l, &[0.5, 0.5], &c, 1, 7).unwrap();
            assert_eq!(t.updates, budget / 2);
            assert_eq!(t.total_grad_evals, 2 * (budget / 2));
            c.algorithm = AlgorithmKind::Gd;
            let t = run_trajectory(&mut l, &[0.5, 0.5], &c, 1, 7).unwrap();
            assert_eq!(t.updates, budget);
        }
    }

    #[test]
    fn zero_radius_collapses_to_gd() {
        let l = land("three-hump-camel");
        let mut c = cfg(AlgorithmKind::Gd, 0.0);
        c.epsilon = 0.0;
        c.budget_t = 500;
        c.tau = 37;
        let w0 = [1.3, -2.2];
        let reference = run_trajectory(&mut l.clone(), &w0, &c, 9, 1).unwrap();
        for kind in [
            AlgorithmKind::Nig,
            AlgorithmKind::Nim,
            AlgorithmKind::Bh { perturb: Perturb::Gradient, monotonic: false },
            AlgorithmKind::Bh { perturb: Perturb::Model, monotonic: false },
        ] {
            let mut ck = c.clone();
            ck.algorithm = kind;
            let t = run_trajectory(&mut l.clone(), &w0, &ck, 9, 1).unwrap();
            assert_eq!(t.samples, reference.samples, "{kind}");
            assert_eq!(t.endpoint, reference.endpoint, "{kind}");
        }
        for normalize in [false, true] {
            let mut g = c.clone();
            g.normalize_gradient = normalize;
            let reference = run_trajectory(&mut l.clone(), &w0, &g, 9, 1).unwrap();
            g.algorithm = AlgorithmKind::Sam;
            g.sam_restore = true;
            g.budget_t = 1000;
            let t = run_trajectory(&mut l.clone(), &w0, &g, 9, 1).unwrap();
            let params = |tr: &Trajectory| tr.samples.iter().map(|s| s.params.clone()).collect::<Vec<_>>();
            assert_eq!(params(&t), params(&reference));
        }
    }

    #[test]
    fn monotonic_hops_never_increase_loss() {
        for name in ["himmelblau", "three-hump-camel", "six-hump-camel"] {
            let l = land(name);
            for kind in [
                AlgorithmKind::Bh { perturb: Perturb::Gradient, monotonic: true },
                AlgorithmKind::Bh { perturb: Perturb::Model, monotonic: true },
            ] {
                let c = cfg(kind, 1.0);
                for i in 0..5 {
                    let w0 = l.sample_uniform(&mut child_stream(3, i));
                    let t = run_trajectory(&mut l.clone(), &w0, &c, i, 50).unwrap();
                    let bh = t.bh.clone().unwrap();
                    assert!(bh.accepted_losses.windows(2).all(|p| p[1] < p[0]));
                    assert_eq!(t.final_loss(), *bh.accepted_losses.last().unwrap());
                }
            }
        }
    }

    #[test]
    fn non_monotonic_endpoint_is_last_hop() {
        let l = land("himmelblau");
        let c = cfg(AlgorithmKind::Bh { perturb: Perturb::Model, monotonic: false }, 2.0);
        let t = run_trajectory(&mut l.clone(), &[0.0, 0.0], &c, 4, 10).unwrap();
        let bh = t.bh.unwrap();
        assert_eq!(bh.accepted, bh.hops);
        assert_eq!(bh.accepted_losses.len(), bh.hops + 1);
    }

    #[test]
    fn divergence_is_flagged() {
        let mut l = land("three-hump-camel");
        let mut c = cfg(AlgorithmKind::Gd, 0.0);
        c.normalize_gradient = false;
        let t = run_trajectory(&mut l, &[4.9, 4.9], &c, 0, 10).unwrap();
        assert!(t.diverged);
        assert!(t.updates < c.budget_t);
        assert_eq!(t.samples.last().unwrap().params, t.endpoint);
    }

    #[test]
    fn bad_inputs() {
        let mut l = land("himmelblau");
        let c = cfg(AlgorithmKind::Gd, 0.0);
        assert!(matches!(
            run_trajectory(&mut l, &[0.0], &c, 0, 1),
            Err(Error::Dimension { .. })
        ));
        let mut bad = c.clone();
        bad.budget_t = 0;
        assert!(run_trajectory(&mut l, &[0.0, 0.0], &bad, 0, 1).is_err());
        assert!(OptimizerRegistry::empty().get("GD").is_err());
        assert_eq!(OptimizerRegistry::builtin().names().len(), 8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn trajectory_contracts(
            seed in any::<u64>(),
            alg in 0usize..8,
            budget in 1usize..400,
            every in 1usize..50,
            rho in 0.0f64..2.0,
            normalize in any::<bool>(),
        ) {
            let l = land("six-hump-camel");
            let mut c = cfg(AlgorithmKind::ALL[alg], rho);
            c.budget_t = budget;
            c.tau = c.tau.min(budget);
            c.normalize_gradient = normalize;
            let w0 = l.sample_uniform(&mut stream(seed));
            let a = run_trajectory(&mut l.clone(), &w0, &c, seed, every).unwrap();
            let b = run_trajectory(&mut l.clone(), &w0, &c, seed, every).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.samples.windows(2).all(|p| p[0].grad_evals < p[1].grad_evals));
            prop_assert_eq!(&a.samples.last().unwrap().params, &a.endpoint);
            prop_assert_eq!(a.samples[0].grad_evals, 0);
            prop_assert_eq!(a.samples.last().unwrap().grad_evals, a.total_grad_evals);
            if !a.diverged {
                let cost = c.algorithm.step_cost();
                prop_assert!(a.total_grad_evals + cost > budget);
                prop_assert!(a.total_grad_evals <= budget + 1);
            }
        }
    }
}
