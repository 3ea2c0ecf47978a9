use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::refine::{refine_registry, RefineOptions};
use super::surfaces::{Himmelblau, SixHumpCamel, Sphere, ThreeHumpCamel};
use super::{parse_registry, Landscape, MinimumKind, MinimumSpec};
use crate::error::{Error, Result};
use crate::params::ParamVector;

const HIMMELBLAU: &str = include_str!("../../data/himmelblau.json");
const THREE_HUMP: &str = include_str!("../../data/three_hump_camel.json");
const SIX_HUMP: &str = include_str!("../../data/six_hump_camel.json");
const SIX_HUMP_PUBLISHED: &str = include_str!("../../data/six_hump_camel_published.json");
const SPHERE: &str = include_str!("../../data/sphere.json");

/// How a run names its landscape: a bare name, or a name plus parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LandscapeSpec {
    Name(String),
    Detailed(LandscapeParams),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeParams {
    pub name: String,
    /// Three-Hump Camel quartic coefficient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quartic: Option<f64>,
    /// Sphere dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
}

impl LandscapeSpec {
    pub fn name(&self) -> &str {
        match self {
            LandscapeSpec::Name(n) => n,
            LandscapeSpec::Detailed(p) => &p.name,
        }
    }

    fn params(&self) -> LandscapeParams {
        match self {
            LandscapeSpec::Name(n) => LandscapeParams {
                name: n.clone(),
                quartic: None,
                dim: None,
            },
            LandscapeSpec::Detailed(p) => p.clone(),
        }
    }
}

impl From<&str> for LandscapeSpec {
    fn from(name: &str) -> Self {
        LandscapeSpec::Name(name.to_string())
    }
}

type Builder = Box<dyn Fn(&LandscapeParams) -> Result<Landscape> + Send + Sync>;

/// Named landscape constructors.
pub struct LandscapeCatalog {
    entries: Vec<(&'static str, Builder)>,
}

impl LandscapeCatalog {
    pub fn empty() -> Self {
        Self { entries: Vec::new() }
    }

    pub fn builtin() -> Self {
        let mut c = Self::empty();
        c.register("himmelblau", |_| {
            Landscape::new(Arc::new(Himmelblau), parse_registry(HIMMELBLAU)?)
        });
        c.register("three-hump-camel", |p| {
            let quartic = p.quartic.unwrap_or(ThreeHumpCamel::DEFAULT_QUARTIC);
            if !quartic.is_finite() || quartic <= 0.0 {
                return Err(Error::config("three-hump-camel quartic must be positive"));
            }
            let surface = Arc::new(ThreeHumpCamel { quartic });
            if quartic == ThreeHumpCamel::DEFAULT_QUARTIC {
                Landscape::new(surface, parse_registry(THREE_HUMP)?)
            } else {
                let probe = Landscape::new(surface.clone(), Vec::new())?;
                let registry = refine_registry(&probe, 100, &RefineOptions::default())?;
                Landscape::new(surface, registry)
            }
        });
        c.register("six-hump-camel", |_| {
            Ok(Landscape::new(Arc::new(SixHumpCamel), parse_registry(SIX_HUMP)?)?
                .with_published(parse_registry(SIX_HUMP_PUBLISHED)?))
        });
        c.register("sphere", |p| {
            let dim = p.dim.unwrap_or(2);
            if dim == 0 {
                return Err(Error::config("sphere dimension must be >= 1"));
            }
            let registry = if dim == 2 {
                parse_registry(SPHERE)?
            } else {
                vec![MinimumSpec {
                    label: "GM".into(),
                    location: ParamVector::zeros(dim),
                    value: 0.0,
                    kind: MinimumKind::Global,
                    sharpness: None,
                }]
            };
            Landscape::new(Arc::new(Sphere { dim }), registry)
        });
        c
    }

    pub fn register<F>(&mut self, name: &'static str, build: F)
    where
        F: Fn(&LandscapeParams) -> Result<Landscape> + Send + Sync + 'static,
    {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, Box::new(build)));
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn build(&self, name: &str) -> Result<Landscape> {
        self.build_spec(&LandscapeSpec::from(name))
    }

    pub fn build_spec(&self, spec: &LandscapeSpec) -> Result<Landscape> {
        let params = spec.params();
        let (_, build) = self
            .entries
            .iter()
            .find(|(n, _)| *n == params.name)
            .ok_or_else(|| Error::Unknown {
                kind: "landscape",
                name: params.name.clone(),
            })?;
        build(&params)
    }
}

impl Default for LandscapeCatalog {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_names() {
        let c = LandscapeCatalog::builtin();
        assert_eq!(c.names(), ["himmelblau", "three-hump-camel", "six-hump-camel", "sphere"]);
        assert!(matches!(c.build("rosenbrock"), Err(Error::Unknown { .. })));
    }

    #[test]
    fn spec_forms_parse() {
        let a: LandscapeSpec = serde_json::from_str("\"himmelblau\"").unwrap();
        assert_eq!(a.name(), "himmelblau");
        let b: LandscapeSpec =
            serde_json::from_str(r#"{"name":"three-hump-camel","quartic":1.05}"#).unwrap();
        assert_eq!(b.name(), "three-hump-camel");
        assert!(serde_json::from_str::<LandscapeSpec>(r#"{"name":"x","bogus":1}"#).is_err());
    }

    #[test]
    fn higher_dimensional_sphere() {
        let s = LandscapeCatalog::builtin()
            .build_spec(&LandscapeSpec::Detailed(LandscapeParams {
                name: "sphere".into(),
                quartic: None,
                dim: Some(3),
            }))
            .unwrap();
        assert_eq!(s.dim(), 3);
        assert!((s.registry()[0].sharpness.unwrap() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn custom_registration() {
        let mut c = LandscapeCatalog::empty();
        c.register("bowl", |_| Landscape::new(Arc::new(Sphere { dim: 1 }), Vec::new()));
        assert_eq!(c.build("bowl").unwrap().dim(), 1);
    }
}
