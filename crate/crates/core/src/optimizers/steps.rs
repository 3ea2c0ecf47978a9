//! Single updates and the local search used by basin hopping.
//!
//! Each function returns the new iterate together with the number of
//! gradient evaluations it spent.

use rand::Rng;
use rand_distr::StandardNormal;

use super::config::OptimizerConfig;
use crate::error::{Error, Result};
use crate::objective::{Evaluation, Objective};
use crate::params::norm;

/// Uniform draw from the solid ball of radius `rho` in `d` dimensions.
///
/// `rho == 0` returns the zero vector without touching the generator.
pub fn sample_ball<R: Rng + ?Sized>(rng: &mut R, rho: f64, d: usize) -> Vec<f64> {
    if rho == 0.0 {
        return vec![0.0; d];
    }
    let dir = loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 0.0 {
            break v.into_iter().map(|x| x / n).collect::<Vec<_>>();
        }
    };
    let u: f64 = rng.random();
    let r = rho * u.powf(1.0 / d as f64);
    dir.into_iter().map(|x| x * r).collect()
}

pub fn perturb_model<R: Rng + ?Sized>(w: &[f64], rho: f64, rng: &mut R) -> Vec<f64> {
    let z = sample_ball(rng, rho, w.len());
    w.iter().zip(z).map(|(a, b)| a + b).collect()
}

pub fn perturb_gradient<R: Rng + ?Sized>(g: &[f64], rho: f64, rng: &mut R) -> Vec<f64> {
    perturb_model(g, rho, rng)
}

fn checked(e: Evaluation, w: &[f64]) -> Result<Evaluation> {
    if e.is_finite() {
        Ok(e)
    } else {
        Err(Error::Diverged { params: w.to_vec() })
    }
}

pub(crate) fn eval(obj: &mut dyn Objective, w: &[f64]) -> Result<Evaluation> {
    let e = obj.evaluate(w);
    checked(e, w)
}

/// Descent direction: the gradient, unit-normalized when configured.
pub(crate) fn direction(g: &[f64], cfg: &OptimizerConfig) -> Vec<f64> {
    let n = norm(g);
    if cfg.normalize_gradient && n > 0.0 {
        g.iter().map(|x| x / n).collect()
    } else {
        g.to_vec()
    }
}

pub(crate) fn descend(w: &[f64], g: &[f64], cfg: &OptimizerConfig) -> Vec<f64> {
    let d = direction(g, cfg);
    w.iter().zip(d).map(|(a, b)| a - cfg.eta * b).collect()
}

pub fn step_gd(obj: &mut dyn Objective, w: &[f64], cfg: &OptimizerConfig) -> Result<(Vec<f64>, usize)> {
    let e = eval(obj, w)?;
    Ok((descend(w, &e.gradient, cfg), 1))
}

pub fn step_nig<R: Rng + ?Sized>(
    obj: &mut dyn Objective,
    w: &[f64],
    cfg: &OptimizerConfig,
    rng: &mut R,
) -> Result<(Vec<f64>, usize)> {
    let e = eval(obj, w)?;
    let g = perturb_gradient(&e.gradient, cfg.rho, rng);
    Ok((descend(w, &g, cfg), 1))
}

/// NiG step with a caller-supplied noise vector.
pub fn step_nig_with(
    obj: &mut dyn Objective,
    w: &[f64],
    cfg: &OptimizerConfig,
    zeta: &[f64],
) -> Result<(Vec<f64>, usize)> {
    let e = eval(obj, w)?;
    let g: Vec<f64> = e.gradient.iter().zip(zeta).map(|(a, b)| a + b).collect();
    Ok((descend(w, &g, cfg), 1))
}

/// `t` is the 1-based update index within the trajectory.
pub fn step_nim<R: Rng + ?Sized>(
    obj: &mut dyn Objective,
    w: &[f64],
    t: usize,
    cfg: &OptimizerConfig,
    rng: &mut R,
) -> Result<(Vec<f64>, usize)> {
    let e = eval(obj, w)?;
    if norm(&e.gradient) < cfg.epsilon && t > cfg.tau && cfg.rho > 0.0 {
        let moved = perturb_model(w, cfg.rho, rng);
        let e2 = eval(obj, &moved)?;
        return Ok((descend(&moved, &e2.gradient, cfg), 2));
    }
    Ok((descend(w, &e.gradient, cfg), 1))
}

pub fn step_sam(obj: &mut dyn Objective, w: &[f64], cfg: &OptimizerConfig) -> Result<(Vec<f64>, usize)> {
    let e = eval(obj, w)?;
    let n = norm(&e.gradient);
    let zeta: Vec<f64> = if n > 0.0 {
        e.gradient.iter().map(|g| cfg.rho * g / n).collect()
    } else {
        vec![0.0; w.len()]
    };
    let ascended: Vec<f64> = w.iter().zip(&zeta).map(|(a, b)| a + b).collect();
    let e2 = checked(obj.evaluate_same_batch(&ascended), &ascended)?;
    let base = if cfg.sam_restore { w } else { &ascended[..] };
    Ok((descend(base, &e2.gradient, cfg), 2))
}

/// Up to `min(tau, max_evals)` iterations of gradient descent, stopping as
/// soon as the gradient norm drops below epsilon. `observe` sees every
/// intermediate iterate.
pub fn local_search(
    obj: &mut dyn Objective,
    w: &[f64],
    cfg: &OptimizerConfig,
    max_evals: usize,
    observe: &mut dyn FnMut(&dyn Objective, &[f64]) -> Result<()>,
) -> Result<(Vec<f64>, usize)> {
    let mut w = w.to_vec();
    let cap = cfg.tau.min(max_evals);
    let mut used = 0;
    while used < cap {
        let e = eval(obj, &w)?;
        used += 1;
        if norm(&e.gradient) < cfg.epsilon {
            break;
        }
        w = descend(&w, &e.gradient, cfg);
        observe(&*obj, &w)?;
    }
    Ok((w, used))
}
