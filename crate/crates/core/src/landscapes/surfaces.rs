use std::fmt;

use super::Domain;

/// A closed-form objective with an analytic gradient.
pub trait Surface: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    fn domain(&self) -> Domain;

    fn value(&self, w: &[f64]) -> f64;

    fn gradient(&self, w: &[f64]) -> Vec<f64>;
}

/// (x² + y − 11)² + (x + y² − 7)²
#[derive(Clone, Copy, Debug, Default)]
pub struct Himmelblau;

impl Surface for Himmelblau {
    fn name(&self) -> &str {
        "himmelblau"
    }

    fn dim(&self) -> usize {
        2
    }

    fn domain(&self) -> Domain {
        Domain::square(2, -5.0, 5.0)
    }

    fn value(&self, w: &[f64]) -> f64 {
        let (x, y) = (w[0], w[1]);
        let a = x * x + y - 11.0;
        let b = x + y * y - 7.0;
        a * a + b * b
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let (x, y) = (w[0], w[1]);
        let a = x * x + y - 11.0;
        let b = x + y * y - 7.0;
        vec![4.0 * x * a + 2.0 * b, 2.0 * a + 4.0 * y * b]
    }
}

/// 2x² − c·x⁴ + x⁶/6 + xy + y², with quartic coefficient c.
#[derive(Clone, Copy, Debug)]
pub struct ThreeHumpCamel {
    pub quartic: f64,
}

impl ThreeHumpCamel {
    pub const DEFAULT_QUARTIC: f64 = 1.05;
}

impl Default for ThreeHumpCamel {
    fn default() -> Self {
        Self {
            quartic: Self::DEFAULT_QUARTIC,
        }
    }
}

impl Surface for ThreeHumpCamel {
    fn name(&self) -> &str {
        "three-hump-camel"
    }

    fn dim(&self) -> usize {
        2
    }

    fn domain(&self) -> Domain {
        Domain::square(2, -5.0, 5.0)
    }

    fn value(&self, w: &[f64]) -> f64 {
        let (x, y) = (w[0], w[1]);
        let x2 = x * x;
        2.0 * x2 - self.quartic * x2 * x2 + x2 * x2 * x2 / 6.0 + x * y + y * y
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let (x, y) = (w[0], w[1]);
        let x2 = x * x;
        vec![
            4.0 * x - 4.0 * self.quartic * x2 * x + x2 * x2 * x + y,
            x + 2.0 * y,
        ]
    }
}

/// (4 − 2.1x² + x⁴/3)·x² + xy + (−4 + 4y²)·y²
#[derive(Clone, Copy, Debug, Default)]
pub struct SixHumpCamel;

impl Surface for SixHumpCamel {
    fn name(&self) -> &str {
        "six-hump-camel"
    }

    fn dim(&self) -> usize {
        2
    }

    fn domain(&self) -> Domain {
        Domain::new(vec![(-3.0, 3.0), (-2.0, 2.0)]).expect("static bounds")
    }

    fn value(&self, w: &[f64]) -> f64 {
        let (x, y) = (w[0], w[1]);
        let x2 = x * x;
        let y2 = y * y;
        (4.0 - 2.1 * x2 + x2 * x2 / 3.0) * x2 + x * y + (-4.0 + 4.0 * y2) * y2
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let (x, y) = (w[0], w[1]);
        let x2 = x * x;
        vec![
            8.0 * x - 8.4 * x2 * x + 2.0 * x2 * x2 * x + y,
            x - 8.0 * y + 16.0 * y * y * y,
        ]
    }
}

/// Σ wᵢ² on [−5, 5]^d. The convex reference case.
#[derive(Clone, Copy, Debug)]
pub struct Sphere {
    pub dim: usize,
}

impl Surface for Sphere {
    fn name(&self) -> &str {
        "sphere"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn domain(&self) -> Domain {
        Domain::square(self.dim, -5.0, 5.0)
    }

    fn value(&self, w: &[f64]) -> f64 {
        w.iter().map(|v| v * v).sum()
    }

    fn gradient(&self, w: &[f64]) -> Vec<f64> {
        w.iter().map(|v| 2.0 * v).collect()
    }
}
