//! Synthetic objectives with known minima.

mod catalog;
pub mod hessian;
mod refine;
pub mod surfaces;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::{Evaluation, NegLossMetric, Objective, Task};
use crate::params::{distance, ParamVector};
use crate::seeding::StreamRng;

pub use catalog::{LandscapeCatalog, LandscapeSpec};
pub use hessian::{eigen_extremes, hessian_fd, Matrix};
pub use refine::{refine_registry, RefineOptions};
pub use surfaces::{Himmelblau, SixHumpCamel, Sphere, Surface, ThreeHumpCamel};

/// Default radius of the ball that counts as a minimum's basin.
pub const DEFAULT_BASIN_RADIUS: f64 = 0.25;

/// Axis-aligned box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    bounds: Vec<(f64, f64)>,
}

impl Domain {
    pub fn new(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::arg("domain needs at least one dimension"));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::arg(format!("dimension {i}: need lo < hi, got ({lo}, {hi})")));
            }
        }
        Ok(Self { bounds })
    }

    pub fn square(dim: usize, lo: f64, hi: f64) -> Self {
        Self {
            bounds: vec![(lo, hi); dim],
        }
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(&self.bounds).all(|(x, &(lo, hi))| lo <= *x && *x <= hi)
    }

    /// Distance from `p` to the nearest face (negative when outside).
    pub fn margin(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(&self.bounds)
            .map(|(x, &(lo, hi))| (x - lo).min(hi - x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn diagonal(&self) -> f64 {
        self.bounds
            .iter()
            .map(|(lo, hi)| (hi - lo) * (hi - lo))
            .sum::<f64>()
            .sqrt()
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector {
        self.bounds
            .iter()
            .map(|&(lo, hi)| rng.random_range(lo..hi))
            .collect::<Vec<_>>()
            .into()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MinimumKind {
    Global,
    Local,
}

/// One known minimum. Serialized as a registry-file entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimumSpec {
    pub label: String,
    pub location: ParamVector,
    pub value: f64,
    pub kind: MinimumKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sharpness: Option<f64>,
}

/// Which basin an endpoint fell into.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BasinLabel {
    Minimum(String),
    Else,
}

impl BasinLabel {
    pub fn as_str(&self) -> &str {
        match self {
            BasinLabel::Minimum(l) => l,
            BasinLabel::Else => "Else",
        }
    }
}

impl fmt::Display for BasinLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn parse_registry(json: &str) -> Result<Vec<MinimumSpec>> {
    Ok(serde_json::from_str(json)?)
}

pub fn registry_to_json(registry: &[MinimumSpec]) -> Result<String> {
    let plain: Vec<MinimumSpec> = registry
        .iter()
        .cloned()
        .map(|mut m| {
            m.sharpness = None;
            m
        })
        .collect();
    Ok(serde_json::to_string_pretty(&plain)?)
}

/// A surface, its domain, and the registry of minima used for classification.
#[derive(Clone)]
pub struct Landscape {
    surface: Arc<dyn Surface>,
    domain: Domain,
    registry: Vec<MinimumSpec>,
    published: Option<Vec<MinimumSpec>>,
}

impl fmt::Debug for Landscape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Landscape")
            .field("name", &self.name())
            .field("domain", &self.domain)
            .field("registry", &self.registry)
            .finish()
    }
}

impl Landscape {
    /// Builds a landscape and fills in the sharpness of every registry entry.
    pub fn new(surface: Arc<dyn Surface>, registry: Vec<MinimumSpec>) -> Result<Self> {
        let domain = surface.domain();
        let mut landscape = Self {
            surface,
            domain,
            registry,
            published: None,
        };
        for i in 0..landscape.registry.len() {
            let s = landscape.sharpness(&landscape.registry[i])?;
            landscape.registry[i].sharpness = Some(s);
        }
        Ok(landscape)
    }

    /// Attaches a published listing of minima that differs from the working registry.
    pub fn with_published(mut self, published: Vec<MinimumSpec>) -> Self {
        self.published = Some(published);
        self
    }

    pub fn name(&self) -> &str {
        self.surface.name()
    }

    pub fn surface(&self) -> &dyn Surface {
        self.surface.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.surface.dim()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn registry(&self) -> &[MinimumSpec] {
        &self.registry
    }

    /// The published listing if it differs from [`Self::registry`], else the registry.
    pub fn published(&self) -> &[MinimumSpec] {
        self.published.as_deref().unwrap_or(&self.registry)
    }

    fn check_dim(&self, point: &[f64]) -> Result<()> {
        if point.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: point.len(),
            });
        }
        Ok(())
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64> {
        self.check_dim(point)?;
        Ok(self.surface.value(point))
    }

    pub fn grad(&self, point: &[f64]) -> Result<ParamVector> {
        self.check_dim(point)?;
        Ok(self.surface.gradient(point).into())
    }

    pub fn hessian_fd(&self, point: &[f64], h: f64) -> Result<Matrix> {
        hessian::hessian_fd(self.surface.as_ref(), &self.domain, point, h)
    }

    /// Largest eigenvalue of the finite-difference Hessian at `minimum`.
    pub fn sharpness(&self, minimum: &MinimumSpec) -> Result<f64> {
        hessian::sharpness_at(
            self.surface.as_ref(),
            &self.domain,
            &minimum.location,
            hessian::DEFAULT_STEP,
        )
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> ParamVector {
        self.domain.sample_uniform(rng)
    }

    /// Nearest registry minimum within `radius`, ties to the earlier entry.
    pub fn classify(&self, point: &[f64], radius: f64) -> BasinLabel {
        if point.len() != self.dim() || point.iter().any(|c| !c.is_finite()) {
            return BasinLabel::Else;
        }
        let mut best: Option<(f64, &MinimumSpec)> = None;
        for m in &self.registry {
            let d = distance(point, &m.location);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, m));
            }
        }
        match best {
            Some((d, m)) if d <= radius => BasinLabel::Minimum(m.label.clone()),
            _ => BasinLabel::Else,
        }
    }

    /// Labels in registry order followed by `Else`.
    pub fn basin_labels(&self) -> Vec<BasinLabel> {
        self.registry
            .iter()
            .map(|m| BasinLabel::Minimum(m.label.clone()))
            .chain(std::iter::once(BasinLabel::Else))
            .collect()
    }

    /// Checks the registry invariants: locations inside the domain, global
    /// entries at the minimum value, globals before locals, locals by ascending
    /// sharpness, and stored values matching the objective within `value_tol`.
    pub fn validate(&self, value_tol: f64) -> Result<()> {
        let min_value = self.registry.iter().map(|m| m.value).fold(f64::INFINITY, f64::min);
        let mut seen_local = false;
        let mut last_sharpness = f64::NEG_INFINITY;
        for m in &self.registry {
            if !self.domain.contains(&m.location) {
                return Err(Error::config(format!("{} lies outside the domain", m.label)));
            }
            let v = self.surface.value(&m.location);
            if (v - m.value).abs() > value_tol {
                return Err(Error::config(format!(
                    "{}: stored value {} but f = {v}",
                    m.label, m.value
                )));
            }
            match m.kind {
                MinimumKind::Global => {
                    if seen_local {
                        return Err(Error::config(format!("global {} listed after a local", m.label)));
                    }
                    if (m.value - min_value).abs() > 1e-9 {
                        return Err(Error::config(format!("global {} is not at the minimum value", m.label)));
                    }
                }
                MinimumKind::Local => {
                    seen_local = true;
                    let s = m.sharpness.unwrap_or(f64::NAN);
                    if s < last_sharpness * (1.0 - 1e-6) {
                        return Err(Error::config(format!("{} is flatter than its predecessor", m.label)));
                    }
                    last_sharpness = s;
                }
            }
        }
        Ok(())
    }
}

impl Objective for Landscape {
    fn dim(&self) -> usize {
        self.surface.dim()
    }

    fn evaluate(&mut self, w: &[f64]) -> Evaluation {
        Evaluation {
            loss: self.surface.value(w),
            gradient: self.surface.gradient(w),
        }
    }

    fn loss(&self, w: &[f64]) -> f64 {
        self.surface.value(w)
    }
}

/// On a synthetic landscape the generalization metric is the negated loss.
impl Task for Landscape {
    fn name(&self) -> String {
        self.surface.name().to_string()
    }

    fn instantiate(&self, _seed: u64) -> Box<dyn Objective + Send> {
        Box::new(NegLossMetric(self.clone()))
    }

    fn initial_point(&self, rng: &mut StreamRng) -> ParamVector {
        self.sample_uniform(rng)
    }
}
