use std::cmp::Ordering;
use std::f64::consts::TAU;

use rayon::prelude::*;

use super::hessian::{eigen_extremes, hessian_fd, DEFAULT_STEP};
use super::{Landscape, MinimumKind, MinimumSpec};
use crate::error::{Error, Result};
use crate::params::{distance, norm};

/// Plain gradient descent settings for the grid search.
#[derive(Clone, Debug)]
pub struct RefineOptions {
    pub eta: f64,
    pub max_steps: usize,
    pub grad_tol: f64,
    pub cluster_radius: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            eta: 1e-3,
            max_steps: 50_000,
            grad_tol: 1e-8,
            cluster_radius: 1e-3,
        }
    }
}

/// Recovers the minima of `landscape` by descending from every point of a
/// `grid_n`^d cell-centred grid and clustering the converged endpoints.
///
/// Stationary points whose Hessian is not positive definite are dropped.
/// Globals come first (ordered counter-clockwise from the positive x axis),
/// then locals by ascending sharpness.
pub fn refine_registry(landscape: &Landscape, grid_n: usize, opts: &RefineOptions) -> Result<Vec<MinimumSpec>> {
    if grid_n < 50 {
        return Err(Error::arg("refine_registry needs grid_n >= 50"));
    }
    let surface = landscape.surface();
    let bounds = landscape.domain().bounds().to_vec();
    let d = bounds.len();
    let total = grid_n
        .checked_pow(d as u32)
        .ok_or_else(|| Error::arg("grid too large"))?;

    let endpoints: Vec<Option<Vec<f64>>> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut rest = idx;
            let mut w: Vec<f64> = bounds
                .iter()
                .map(|&(lo, hi)| {
                    let i = rest % grid_n;
                    rest /= grid_n;
                    lo + (i as f64 + 0.5) * (hi - lo) / grid_n as f64
                })
                .collect();
            for _ in 0..opts.max_steps {
                let g = surface.gradient(&w);
                if norm(&g) < opts.grad_tol {
                    return Some(w);
                }
                for (wi, gi) in w.iter_mut().zip(&g) {
                    *wi -= opts.eta * gi;
                }
                if w.iter().any(|c| !c.is_finite()) {
                    return None;
                }
            }
            None
        })
        .collect();

    // greedy clustering in grid order keeps the result deterministic
    let mut clusters: Vec<(Vec<f64>, Vec<f64>, usize)> = Vec::new(); // (first, sum, count)
    for p in endpoints.into_iter().flatten() {
        match clusters
            .iter_mut()
            .find(|(first, _, _)| distance(first, &p) <= opts.cluster_radius)
        {
            Some((_, sum, count)) => {
                for (s, x) in sum.iter_mut().zip(&p) {
                    *s += x;
                }
                *count += 1;
            }
            None => clusters.push((p.clone(), p, 1)),
        }
    }

    let mut minima = Vec::new();
    for (_, sum, count) in clusters {
        let center: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
        let Ok(hess) = hessian_fd(surface, landscape.domain(), &center, DEFAULT_STEP) else {
            continue;
        };
        let (lo, hi) = eigen_extremes(&hess)?;
        if lo <= 0.0 {
            continue;
        }
        minima.push(MinimumSpec {
            label: String::new(),
            value: surface.value(&center),
            location: center.into(),
            kind: MinimumKind::Local,
            sharpness: Some(hi),
        });
    }
    if minima.is_empty() {
        return Ok(minima);
    }

    let best = minima.iter().map(|m| m.value).fold(f64::INFINITY, f64::min);
    let tol = 1e-8 * best.abs().max(1.0);
    for m in &mut minima {
        if m.value - best <= tol {
            m.kind = MinimumKind::Global;
        }
    }
    minima.sort_by(order);

    let globals = minima.iter().filter(|m| m.kind == MinimumKind::Global).count();
    let mut local_idx = 0;
    for (i, m) in minima.iter_mut().enumerate() {
        m.label = match m.kind {
            MinimumKind::Global if globals == 1 => "GM".to_string(),
            MinimumKind::Global => format!("GM{}", i + 1),
            MinimumKind::Local => {
                local_idx += 1;
                format!("LM{local_idx}")
            }
        };
    }
    Ok(minima)
}

fn angle(p: &[f64]) -> f64 {
    if p.len() != 2 {
        return 0.0;
    }
    let a = p[1].atan2(p[0]);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

fn positional(a: &MinimumSpec, b: &MinimumSpec) -> Ordering {
    angle(&a.location)
        .total_cmp(&angle(&b.location))
        .then_with(|| {
            a.location
                .iter()
                .zip(b.location.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
}

fn order(a: &MinimumSpec, b: &MinimumSpec) -> Ordering {
    use MinimumKind::*;
    match (a.kind, b.kind) {
        (Global, Local) => Ordering::Less,
        (Local, Global) => Ordering::Greater,
        (Global, Global) => positional(a, b),
        (Local, Local) => {
            let (sa, sb) = (a.sharpness.unwrap_or(0.0), b.sharpness.unwrap_or(0.0));
            if (sa - sb).abs() <= 1e-6 * sa.abs().max(sb.abs()).max(1.0) {
                positional(a, b)
            } else {
                sa.total_cmp(&sb)
            }
        }
    }
}
