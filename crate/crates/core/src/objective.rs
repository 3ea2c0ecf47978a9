//! The interface optimizers consume.

use crate::params::ParamVector;
use crate::seeding::StreamRng;

/// Loss and gradient from one (budgeted) gradient evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub gradient: Vec<f64>,
}

impl Evaluation {
    pub fn is_finite(&self) -> bool {
        self.loss.is_finite() && self.gradient.iter().all(|g| g.is_finite())
    }
}

/// A differentiable objective as seen by an optimizer.
///
/// `evaluate` is the only budgeted call. Stochastic objectives draw a fresh
/// minibatch per call; `evaluate_same_batch` reuses the batch of the previous
/// call so that both gradients of a SAM update see the same data.
pub trait Objective {
    fn dim(&self) -> usize;

    fn evaluate(&mut self, w: &[f64]) -> Evaluation;

    fn evaluate_same_batch(&mut self, w: &[f64]) -> Evaluation {
        self.evaluate(w)
    }

    /// Full-objective loss used for recording and acceptance tests. Not budgeted.
    fn loss(&self, w: &[f64]) -> f64;

    /// Generalization metric (higher is better), when the objective has one.
    fn metric(&self, _w: &[f64]) -> Option<f64> {
        None
    }
}

impl<O: Objective + ?Sized> Objective for Box<O> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn evaluate(&mut self, w: &[f64]) -> Evaluation {
        (**self).evaluate(w)
    }

    fn evaluate_same_batch(&mut self, w: &[f64]) -> Evaluation {
        (**self).evaluate_same_batch(w)
    }

    fn loss(&self, w: &[f64]) -> f64 {
        (**self).loss(w)
    }

    fn metric(&self, w: &[f64]) -> Option<f64> {
        (**self).metric(w)
    }
}

/// Something trajectories can be launched on: produces a fresh objective per
/// trajectory (owning its own minibatch stream) and initial points.
pub trait Task: Sync {
    fn name(&self) -> String;

    fn instantiate(&self, seed: u64) -> Box<dyn Objective + Send>;

    fn initial_point(&self, rng: &mut StreamRng) -> ParamVector;
}

/// Wraps an objective so that its metric is the negated loss.
#[derive(Clone, Debug)]
pub struct NegLossMetric<O>(pub O);

impl<O: Objective> Objective for NegLossMetric<O> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn evaluate(&mut self, w: &[f64]) -> Evaluation {
        self.0.evaluate(w)
    }

    fn evaluate_same_batch(&mut self, w: &[f64]) -> Evaluation {
        self.0.evaluate_same_batch(w)
    }

    fn loss(&self, w: &[f64]) -> f64 {
        self.0.loss(w)
    }

    fn metric(&self, w: &[f64]) -> Option<f64> {
        Some(-self.0.loss(w))
    }
}
