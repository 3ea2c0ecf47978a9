use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::data::Example;
use crate::error::{Error, Result};

/// Shape of a fully connected tanh network with a softmax output.
///
/// Parameters live in one flat vector; each layer stores its `out × in`
/// weights row-major followed by its `out` biases.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
}

impl Mlp {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::arg("an MLP needs at least two non-empty layers"));
        }
        Ok(Self { sizes })
    }

    /// 2-16-16-K
    pub fn default_for(classes: usize) -> Self {
        Self {
            sizes: vec![2, 16, 16, classes],
        }
    }

    pub fn classes(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn param_count(&self) -> usize {
        self.sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }

    /// Weights ~ N(0, 1/fan_in), biases zero.
    pub fn init<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        for w in self.sizes.windows(2) {
            let scale = (1.0 / w[0] as f64).sqrt();
            p.extend((0..w[0] * w[1]).map(|_| scale * rng.sample::<f64, _>(StandardNormal)));
            p.extend(std::iter::repeat_n(0.0, w[1]));
        }
        p
    }

    /// Activations of every layer, input first, logits last.
    fn forward_all(&self, params: &[f64], x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.to_vec()];
        let mut off = 0;
        let last = self.sizes.len() - 2;
        for (l, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &params[off..off + n_in * n_out];
            let bias = &params[off + n_in * n_out..off + (n_in + 1) * n_out];
            off += (n_in + 1) * n_out;
            let a = acts.last().unwrap();
            let z: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &weights[o * n_in..(o + 1) * n_in];
                    bias[o] + row.iter().zip(a).map(|(w, x)| w * x).sum::<f64>()
                })
                .collect();
            acts.push(if l == last { z } else { z.into_iter().map(f64::tanh).collect() });
        }
        acts
    }

    pub fn logits(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        self.forward_all(params, x).pop().unwrap()
    }

    /// Index of the largest logit, earliest on ties.
    pub fn predict(&self, params: &[f64], x: &[f64]) -> usize {
        let z = self.logits(params, x);
        let mut best = 0;
        for (i, v) in z.iter().enumerate() {
            if *v > z[best] {
                best = i;
            }
        }
        best
    }

    /// Mean cross-entropy over the batch (no gradient).
    pub fn loss(&self, params: &[f64], batch: &[&Example]) -> f64 {
        let total: f64 = batch
            .iter()
            .map(|e| {
                let z = self.logits(params, &e.x);
                log_sum_exp(&z) - z[e.label]
            })
            .sum();
        total / batch.len() as f64
    }

    /// Mean cross-entropy and its gradient by backpropagation.
    pub fn loss_grad(&self, params: &[f64], batch: &[&Example]) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::arg("empty batch"));
        }
        if params.len() != self.param_count() {
            return Err(Error::Dimension {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let inv_b = 1.0 / batch.len() as f64;
        let mut grad = vec![0.0; params.len()];
        let mut loss = 0.0;
        let offsets: Vec<usize> = self
            .sizes
            .windows(2)
            .scan(0, |off, w| {
                let start = *off;
                *off += (w[0] + 1) * w[1];
                Some(start)
            })
            .collect();

        for e in batch {
            let acts = self.forward_all(params, &e.x);
            let z = acts.last().unwrap();
            let lse = log_sum_exp(z);
            loss += lse - z[e.label];
            // dL/dz for softmax cross-entropy
            let mut delta: Vec<f64> = z.iter().map(|v| (v - lse).exp() * inv_b).collect();
            delta[e.label] -= inv_b;

            for l in (0..self.sizes.len() - 1).rev() {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let off = offsets[l];
                let a = &acts[l];
                for o in 0..n_out {
                    let d = delta[o];
                    let row = &mut grad[off + o * n_in..off + (o + 1) * n_in];
                    for (g, x) in row.iter_mut().zip(a) {
                        *g += d * x;
                    }
                    grad[off + n_in * n_out + o] += d;
                }
                if l > 0 {
                    let weights = &params[off..off + n_in * n_out];
                    delta = (0..n_in)
                        .map(|i| {
                            let back: f64 = (0..n_out).map(|o| weights[o * n_in + i] * delta[o]).sum();
                            back * (1.0 - a[i] * a[i])
                        })
                        .collect();
                }
            }
        }
        let loss = loss * inv_b;
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { params: params.to_vec() });
        }
        Ok((loss, grad))
    }
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::stream;
    use approx::assert_abs_diff_eq;

    fn batch(n: usize, k: usize) -> Vec<Example> {
        (0..n)
            .map(|i| Example {
                x: [(i as f64 * 0.37).sin() * 2.0, (i as f64 * 0.91).cos()],
                label: i % k,
            })
            .collect()
    }

    #[test]
    fn shapes() {
        let m = Mlp::default_for(4);
        assert_eq!(m.param_count(), 3 * 16 + 17 * 16 + 17 * 4);
        assert_eq!(m.init(&mut stream(0)).len(), m.param_count());
        assert!(Mlp::new(vec![2]).is_err());
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = Mlp::default_for(2);
        let b = batch(6, 2);
        let refs: Vec<&Example> = b.iter().collect();
        let (loss, _) = m.loss_grad(&vec![0.0; m.param_count()], &refs).unwrap();
        assert_abs_diff_eq!(loss, 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn duplicated_batch_is_equivalent() {
        let m = Mlp::new(vec![2, 5, 3]).unwrap();
        let p = m.init(&mut stream(3));
        let b = batch(7, 3);
        let once: Vec<&Example> = b.iter().collect();
        let twice: Vec<&Example> = b.iter().chain(&b).collect();
        let (l1, g1) = m.loss_grad(&p, &once).unwrap();
        let (l2, g2) = m.loss_grad(&p, &twice).unwrap();
        assert_abs_diff_eq!(l1, l2, epsilon = 1e-12);
        for (a, b) in g1.iter().zip(&g2) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(l1, m.loss(&p, &once), epsilon = 1e-12);
    }

    #[test]
    fn backprop_matches_central_differences() {
        let m = Mlp::new(vec![2, 8, 8, 3]).unwrap();
        let b = batch(9, 3);
        let refs: Vec<&Example> = b.iter().collect();
        let mut rng = stream(21);
        for _ in 0..5 {
            let p = m.init(&mut rng);
            let (_, g) = m.loss_grad(&p, &refs).unwrap();
            let h = 1e-5;
            let mut worst = 0.0f64;
            for i in 0..p.len() {
                let mut up = p.clone();
                let mut dn = p.clone();
                up[i] += h;
                dn[i] -= h;
                let fd = (m.loss(&up, &refs) - m.loss(&dn, &refs)) / (2.0 * h);
                worst = worst.max((fd - g[i]).abs() / fd.abs().max(g[i].abs()).max(1e-3));
            }
            assert!(worst < 1e-4, "{worst}");
        }
    }

    #[test]
    fn blown_up_weights_diverge() {
        let m = Mlp::new(vec![2, 2]).unwrap();
        let b = batch(2, 2);
        let refs: Vec<&Example> = b.iter().collect();
        let p = vec![f64::INFINITY; m.param_count()];
        assert!(matches!(m.loss_grad(&p, &refs), Err(Error::Diverged { .. })));
    }
}
