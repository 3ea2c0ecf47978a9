//! Finite-difference checks of analytic gradients.

use serde::Serialize;

use crate::landscapes::{Domain, Surface};
use crate::params::norm;
use crate::seeding::stream;
use crate::toytask::{Example, Mlp};

pub const LANDSCAPE_TOLERANCE: f64 = 1e-6;
pub const MLP_TOLERANCE: f64 = 1e-4;
pub const DEFAULT_H: f64 = 1e-5;

/// One comparison of an analytic gradient against central differences.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradCheck {
    pub point: Vec<f64>,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    /// ‖analytic − numeric‖ / max(‖analytic‖, ‖numeric‖, 1e-12)
    pub rel_error: f64,
    /// Coordinate with the largest absolute disagreement.
    pub worst_coord: usize,
}

impl GradCheck {
    pub fn new(point: Vec<f64>, analytic: Vec<f64>, numeric: Vec<f64>) -> Self {
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, n)| a - n).collect();
        let scale = norm(&analytic).max(norm(&numeric)).max(1e-12);
        let worst_coord = diff
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map_or(0, |(i, _)| i);
        Self {
            point,
            rel_error: norm(&diff) / scale,
            worst_coord,
            analytic,
            numeric,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradCheckReport {
    pub subject: String,
    pub tolerance: f64,
    pub checks: usize,
    pub max_error: f64,
    pub failures: Vec<GradCheck>,
}

impl GradCheckReport {
    fn from_checks(subject: String, tolerance: f64, checks: Vec<GradCheck>) -> Self {
        let max_error = checks.iter().map(|c| c.rel_error).fold(0.0, f64::max);
        Self {
            subject,
            tolerance,
            checks: checks.len(),
            max_error,
            failures: checks.into_iter().filter(|c| !(c.rel_error <= tolerance)).collect(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn central_difference(f: impl Fn(&[f64]) -> f64, w: &[f64], h: f64) -> Vec<f64> {
    let mut x = w.to_vec();
    (0..w.len())
        .map(|i| {
            x[i] = w[i] + h;
            let up = f(&x);
            x[i] = w[i] - h;
            let down = f(&x);
            x[i] = w[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Checks `surface` at `points` uniform draws from the interior of `domain`
/// (shrunk by `h` on every side).
pub fn check_surface(surface: &dyn Surface, domain: &Domain, points: usize, seed: u64, h: f64) -> GradCheckReport {
    let inner = Domain::new(domain.bounds().iter().map(|&(lo, hi)| (lo + h, hi - h)).collect())
        .unwrap_or_else(|_| domain.clone());
    let mut rng = stream(seed);
    let checks = (0..points)
        .map(|_| {
            let w = inner.sample_uniform(&mut rng).into_inner();
            let numeric = central_difference(|x| surface.value(x), &w, h);
            GradCheck::new(w.clone(), surface.gradient(&w), numeric)
        })
        .collect();
    GradCheckReport::from_checks(surface.name().to_string(), LANDSCAPE_TOLERANCE, checks)
}

/// Checks backpropagation on `batch` at `points` freshly initialised models.
pub fn check_mlp(model: &Mlp, batch: &[Example], points: usize, seed: u64, h: f64) -> GradCheckReport {
    let refs: Vec<&Example> = batch.iter().collect();
    let mut rng = stream(seed);
    let checks = (0..points)
        .map(|_| {
            let p = model.init(&mut rng);
            let analytic = match model.loss_grad(&p, &refs) {
                Ok((_, g)) => g,
                Err(_) => vec![f64::NAN; p.len()],
            };
            let numeric = central_difference(|w| model.loss(w, &refs), &p, h);
            GradCheck::new(p, analytic, numeric)
        })
        .collect();
    let sizes: Vec<String> = model.sizes.iter().map(usize::to_string).collect();
    GradCheckReport::from_checks(format!("mlp-{}", sizes.join("-")), MLP_TOLERANCE, checks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscapes::LandscapeCatalog;
    use crate::toytask::{make_dataset, DatasetSpec};

    #[derive(Debug)]
    struct Skewed;

    impl Surface for Skewed {
        fn name(&self) -> &str {
            "skewed"
        }
        fn dim(&self) -> usize {
            2
        }
        fn domain(&self) -> Domain {
            Domain::square(2, -1.0, 1.0)
        }
        fn value(&self, w: &[f64]) -> f64 {
            w[0] * w[0] + 3.0 * w[1] * w[1]
        }
        fn gradient(&self, w: &[f64]) -> Vec<f64> {
            // the second component should be 6y
            vec![2.0 * w[0], 5.0 * w[1]]
        }
    }

    #[test]
    fn shipped_landscapes_pass() {
        let cat = LandscapeCatalog::builtin();
        for name in cat.names() {
            let l = cat.build(name).unwrap();
            let r = check_surface(l.surface(), l.domain(), 100, 1, DEFAULT_H);
            assert!(r.passed(), "{name}: {}", r.max_error);
        }
    }

    #[test]
    fn corrupted_gradient_is_caught() {
        let r = check_surface(&Skewed, &Skewed.domain(), 20, 0, DEFAULT_H);
        assert!(!r.passed());
        assert!(r.failures.iter().all(|f| f.worst_coord == 1));
    }

    #[test]
    fn mlp_passes() {
        let ds = make_dataset(&DatasetSpec::default()).unwrap();
        let m = Mlp::new(vec![2, 8, 8, 4]).unwrap();
        let r = check_mlp(&m, &ds.train[..32], 20, 3, DEFAULT_H);
        assert!(r.passed(), "{}", r.max_error);
    }
}
