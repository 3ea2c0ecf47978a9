//! A small classification task: a tanh MLP trained by minibatch gradients on
//! synthetic 2-D data, scored by accuracy or macro-F1 on a held-out split.

mod data;
mod mlp;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use data::{make_dataset, DatasetSpec, Example, Generator, MinibatchStream, Split, ToyDataset};
pub use mlp::Mlp;

use crate::error::Result;
use crate::objective::{Evaluation, Objective, Task};
use crate::params::ParamVector;
use crate::seeding::StreamRng;
use crate::stats::{accuracy, macro_f1};

/// Noise radius used for the toy task when none is configured.
pub const DEFAULT_TOY_RHO: f64 = 0.01;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Accuracy,
    #[default]
    MacroF1,
}

pub fn evaluate(model: &Mlp, params: &[f64], examples: &[Example], metric: MetricKind) -> Result<f64> {
    let preds: Vec<usize> = examples.iter().map(|e| model.predict(params, &e.x)).collect();
    let labels: Vec<usize> = examples.iter().map(|e| e.label).collect();
    match metric {
        MetricKind::Accuracy => accuracy(&preds, &labels),
        MetricKind::MacroF1 => macro_f1(&preds, &labels, model.classes()),
    }
}

/// Dataset, network shape and minibatch settings; spawns one
/// [`TaskObjective`] per trajectory.
#[derive(Clone, Debug)]
pub struct ToyTask {
    pub dataset: Arc<ToyDataset>,
    pub model: Mlp,
    pub batch_size: usize,
    pub metric: MetricKind,
}

impl ToyTask {
    pub fn new(dataset: ToyDataset, batch_size: usize, metric: MetricKind) -> Self {
        let model = Mlp::default_for(dataset.classes);
        Self {
            dataset: Arc::new(dataset),
            model,
            batch_size,
            metric,
        }
    }

    pub fn objective(&self, seed: u64) -> Result<TaskObjective> {
        Ok(TaskObjective {
            task: self.clone(),
            stream: MinibatchStream::new(self.dataset.train.len(), self.batch_size, seed)?,
            last_batch: Vec::new(),
        })
    }
}

impl Task for ToyTask {
    fn name(&self) -> String {
        "toy".into()
    }

    fn instantiate(&self, seed: u64) -> Box<dyn Objective + Send> {
        Box::new(self.objective(seed).expect("toy task has training data"))
    }

    fn initial_point(&self, rng: &mut StreamRng) -> ParamVector {
        self.model.init(rng).into()
    }
}

/// Minibatch view of a [`ToyTask`]: each budgeted evaluation draws the next
/// batch, `evaluate_same_batch` reuses the previous one.
#[derive(Clone, Debug)]
pub struct TaskObjective {
    task: ToyTask,
    stream: MinibatchStream,
    last_batch: Vec<usize>,
}

impl TaskObjective {
    fn eval_batch(&self, w: &[f64]) -> Evaluation {
        let train = &self.task.dataset.train;
        let batch: Vec<&Example> = self.last_batch.iter().map(|&i| &train[i]).collect();
        match self.task.model.loss_grad(w, &batch) {
            Ok((loss, gradient)) => Evaluation { loss, gradient },
            Err(_) => Evaluation {
                loss: f64::NAN,
                gradient: vec![f64::NAN; w.len()],
            },
        }
    }
}

impl Objective for TaskObjective {
    fn dim(&self) -> usize {
        self.task.model.param_count()
    }

    fn evaluate(&mut self, w: &[f64]) -> Evaluation {
        self.last_batch = self.stream.next_batch();
        self.eval_batch(w)
    }

    fn evaluate_same_batch(&mut self, w: &[f64]) -> Evaluation {
        if self.last_batch.is_empty() {
            self.last_batch = self.stream.next_batch();
        }
        self.eval_batch(w)
    }

    /// Full training-set loss.
    fn loss(&self, w: &[f64]) -> f64 {
        let all: Vec<&Example> = self.task.dataset.train.iter().collect();
        self.task.model.loss(w, &all)
    }

    /// Test-split metric.
    fn metric(&self, w: &[f64]) -> Option<f64> {
        evaluate(&self.task.model, w, &self.task.dataset.test, self.task.metric).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizers::{run_trajectory, AlgorithmKind, OptimizerConfig};
    use crate::seeding::stream;

    fn task(batch: usize) -> ToyTask {
        ToyTask::new(make_dataset(&DatasetSpec::default()).unwrap(), batch, MetricKind::Accuracy)
    }

    fn sgd(budget: usize) -> OptimizerConfig {
        let mut c = OptimizerConfig::new(AlgorithmKind::Gd, 0.0);
        c.eta = 0.05;
        c.normalize_gradient = false;
        c.budget_t = budget;
        c
    }

    #[test]
    fn constant_predictor_scores() {
        let examples: Vec<Example> = (0..10).map(|i| Example { x: [0.0, 0.0], label: i % 2 }).collect();
        let m = Mlp::new(vec![2, 2]).unwrap();
        // bias favours class 0 everywhere
        let p = vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        assert_eq!(evaluate(&m, &p, &examples, MetricKind::Accuracy).unwrap(), 0.5);
        let f1 = evaluate(&m, &p, &examples, MetricKind::MacroF1).unwrap();
        assert!((f1 - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn full_batch_is_deterministic() {
        let t = task(1000);
        let mut a = t.objective(1).unwrap();
        let mut b = t.objective(2).unwrap();
        let w = t.model.init(&mut stream(0));
        assert_eq!(a.evaluate(&w), b.evaluate(&w));
        assert_eq!(a.evaluate(&w), a.evaluate(&w));
    }

    #[test]
    fn shared_seed_shares_batches_and_sam_reuses_batch() {
        let t = task(16);
        let w = t.model.init(&mut stream(0));
        let mut a = t.objective(4).unwrap();
        let mut b = t.objective(4).unwrap();
        for _ in 0..5 {
            assert_eq!(a.evaluate(&w), b.evaluate(&w));
        }
        let first = a.evaluate(&w);
        assert_eq!(a.evaluate_same_batch(&w), first);
        assert_ne!(a.evaluate(&w), first);
    }

    #[test]
    fn zero_noise_blobs_become_separable() {
        let spec = DatasetSpec {
            generator: Generator::Blobs {
                counts: vec![30, 30],
                radius: 2.0,
                noise: 0.0,
            },
            ..DatasetSpec::default()
        };
        let t = ToyTask::new(make_dataset(&spec).unwrap(), 16, MetricKind::Accuracy);
        let mut obj = t.objective(0).unwrap();
        let w0 = t.initial_point(&mut stream(1));
        let tr = run_trajectory(&mut obj, &w0, &sgd(2000), 0, 100).unwrap();
        assert!(tr.final_loss() < 0.05);
        let acc = evaluate(&t.model, &tr.endpoint, &t.dataset.test, MetricKind::Accuracy).unwrap();
        assert!(acc >= 0.99);
    }

    #[test]
    fn sgd_fits_default_blobs() {
        let t = task(16);
        let fitted = (0..10)
            .filter(|&seed| {
                let mut obj = t.objective(seed).unwrap();
                let w0 = t.initial_point(&mut stream(seed));
                let tr = run_trajectory(&mut obj, &w0, &sgd(2000), seed, 500).unwrap();
                tr.final_loss() < 0.1
            })
            .count();
        assert!(fitted >= 9, "{fitted}");
    }
}
