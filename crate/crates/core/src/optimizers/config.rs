use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Perturb {
    Gradient,
    Model,
}

/// Which algorithm a config selects. Serialized as its display label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AlgorithmKind {
    Gd,
    Nig,
    Nim,
    Sam,
    Bh { perturb: Perturb, monotonic: bool },
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 8] = [
        AlgorithmKind::Gd,
        AlgorithmKind::Nig,
        AlgorithmKind::Nim,
        AlgorithmKind::Sam,
        AlgorithmKind::Bh { perturb: Perturb::Gradient, monotonic: false },
        AlgorithmKind::Bh { perturb: Perturb::Model, monotonic: false },
        AlgorithmKind::Bh { perturb: Perturb::Gradient, monotonic: true },
        AlgorithmKind::Bh { perturb: Perturb::Model, monotonic: true },
    ];

    pub fn label(self) -> &'static str {
        use AlgorithmKind::*;
        use Perturb::*;
        match self {
            Gd => "GD",
            Nig => "NiG-GD",
            Nim => "NiM-GD",
            Sam => "SAM",
            Bh { perturb: Gradient, monotonic: false } => "NiG-BH",
            Bh { perturb: Model, monotonic: false } => "NiM-BH",
            Bh { perturb: Gradient, monotonic: true } => "NiG-MBH",
            Bh { perturb: Model, monotonic: true } => "NiM-MBH",
        }
    }

    /// Gradient evaluations one update needs before it may start.
    pub fn step_cost(self) -> usize {
        match self {
            AlgorithmKind::Sam => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgorithmKind::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Unknown {
                kind: "algorithm",
                name: s.to_string(),
            })
    }
}

impl TryFrom<String> for AlgorithmKind {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AlgorithmKind> for String {
    fn from(k: AlgorithmKind) -> String {
        k.label().to_string()
    }
}

/// Hyperparameters shared by all eight algorithms.
///
/// `budget_t` counts gradient evaluations, not updates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerConfig {
    pub algorithm: AlgorithmKind,
    pub eta: f64,
    pub rho: f64,
    pub budget_t: usize,
    pub tau: usize,
    pub epsilon: f64,
    pub sam_restore: bool,
    pub normalize_gradient: bool,
}

pub const DEFAULT_ETA: f64 = 0.01;
pub const DEFAULT_BUDGET: usize = 2000;
pub const DEFAULT_TAU: usize = 100;
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Default noise radius for a box with the given diagonal.
pub fn default_rho(diagonal: f64) -> f64 {
    0.1 * diagonal / 10.0
}

impl OptimizerConfig {
    pub fn new(algorithm: AlgorithmKind, rho: f64) -> Self {
        Self {
            algorithm,
            eta: DEFAULT_ETA,
            rho,
            budget_t: DEFAULT_BUDGET,
            tau: DEFAULT_TAU,
            epsilon: DEFAULT_EPSILON,
            sam_restore: false,
            normalize_gradient: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::config(format!("{}: {m}", self.algorithm)));
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad("eta must be positive");
        }
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return bad("rho must be non-negative");
        }
        if self.budget_t == 0 {
            return bad("budget_t must be positive");
        }
        if self.tau == 0 || self.tau > self.budget_t {
            return bad("tau must be in 1..=budget_t");
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return bad("epsilon must be non-negative");
        }
        Ok(())
    }
}
