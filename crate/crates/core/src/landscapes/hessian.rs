use crate::error::{Error, Result};

use super::{Domain, Surface};

pub const DEFAULT_STEP: f64 = 1e-4;

const POWER_ITERATIONS: usize = 200;
const POWER_TOLERANCE: f64 = 1e-10;

/// Dense square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// Upper bound on the spectral radius.
    fn gershgorin_radius(&self) -> f64 {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// Central second differences of `surface` at `point`, symmetrized.
pub fn hessian_fd(surface: &dyn Surface, domain: &Domain, point: &[f64], h: f64) -> Result<Matrix> {
    if !(h > 0.0) {
        return Err(Error::arg("finite-difference step must be positive"));
    }
    if point.len() != surface.dim() {
        return Err(Error::Dimension {
            expected: surface.dim(),
            got: point.len(),
        });
    }
    if domain.margin(point) < h {
        return Err(Error::Boundary {
            point: point.to_vec(),
            margin: h,
        });
    }
    let n = point.len();
    let f = |offsets: &[(usize, f64)]| {
        let mut p = point.to_vec();
        for &(k, d) in offsets {
            p[k] += d;
        }
        surface.value(&p)
    };
    let center = surface.value(point);
    let mut raw = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let v = if i == j {
                (f(&[(i, h)]) - 2.0 * center + f(&[(i, -h)])) / (h * h)
            } else {
                (f(&[(i, h), (j, h)]) - f(&[(i, h), (j, -h)]) - f(&[(i, -h), (j, h)])
                    + f(&[(i, -h), (j, -h)]))
                    / (4.0 * h * h)
            };
            raw.set(i, j, v);
        }
    }
    let t = raw.transpose();
    let mut sym = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            sym.set(i, j, 0.5 * (raw.get(i, j) + t.get(i, j)));
        }
    }
    Ok(sym)
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn eigen_extremes(m: &Matrix) -> Result<(f64, f64)> {
    if !m.is_finite() {
        return Err(Error::Numeric("non-finite Hessian entries".into()));
    }
    match m.dim() {
        1 => Ok((m.get(0, 0), m.get(0, 0))),
        2 => {
            let (a, b, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 1));
            let mean = 0.5 * (a + d);
            let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            Ok((mean - r, mean + r))
        }
        _ => {
            // shift so the spectrum is non-negative; power iteration then finds
            // the largest algebraic eigenvalue
            let s = m.gershgorin_radius();
            let top = power_iteration(m, s)? - s;
            let mut neg = m.clone();
            for v in neg.data.iter_mut() {
                *v = -*v;
            }
            let bottom = -(power_iteration(&neg, s)? - s);
            Ok((bottom, top))
        }
    }
}

fn power_iteration(m: &Matrix, shift: f64) -> Result<f64> {
    let n = m.dim();
    // fixed, non-axis-aligned start keeps the result deterministic
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut lambda = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let mut w = m.mul_vec(&v);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi += shift * vi;
        }
        let norm = crate::params::norm(&w);
        if norm == 0.0 {
            return Ok(0.0);
        }
        let next = w.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>()
            / v.iter().map(|x| x * x).sum::<f64>();
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
        let done = (next - lambda).abs() <= POWER_TOLERANCE * next.abs().max(1.0);
        lambda = next;
        if done {
            break;
        }
    }
    if !lambda.is_finite() {
        return Err(Error::Numeric("power iteration did not produce a finite eigenvalue".into()));
    }
    Ok(lambda)
}

/// Largest Hessian eigenvalue at `point`.
pub fn sharpness_at(surface: &dyn Surface, domain: &Domain, point: &[f64], h: f64) -> Result<f64> {
    let hess = hessian_fd(surface, domain, point, h)?;
    Ok(eigen_extremes(&hess)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscapes::surfaces::{Himmelblau, Sphere};

    #[test]
    fn himmelblau_hessian_at_gm1() {
        let s = Himmelblau;
        let h = hessian_fd(&s, &s.domain(), &[3.0, 2.0], 1e-4).unwrap();
        let want = [[74.0, 20.0], [20.0, 34.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((h.get(i, j) - want[i][j]).abs() < 1e-2, "{h:?}");
            }
        }
        // closed-form: 54 + sqrt(800)
        let top = eigen_extremes(&h).unwrap().1;
        assert!((top - 82.28).abs() < 0.1, "{top}");
    }

    #[test]
    fn quadratic_hessian_is_exact() {
        let s = Sphere { dim: 2 };
        let h = hessian_fd(&s, &s.domain(), &[0.0, 0.0], 1e-4).unwrap();
        assert!((h.get(0, 0) - 2.0).abs() < 1e-6);
        assert!((h.get(1, 1) - 2.0).abs() < 1e-6);
        assert!(h.get(0, 1).abs() < 1e-6);
        assert_eq!(eigen_extremes(&h).unwrap().1.round(), 2.0);
    }

    #[test]
    fn output_is_exactly_symmetric() {
        let s = Himmelblau;
        for p in [[0.3, -1.7], [2.2, 4.1], [-4.5, 0.01]] {
            let h = hessian_fd(&s, &s.domain(), &p, 1e-4).unwrap();
            assert_eq!(h, h.transpose());
        }
    }

    #[test]
    fn boundary_points_rejected() {
        let s = Himmelblau;
        let err = hessian_fd(&s, &s.domain(), &[5.0 - 1e-5, 0.0], 1e-4).unwrap_err();
        assert!(matches!(err, Error::Boundary { .. }));
        assert!(hessian_fd(&s, &s.domain(), &[0.0, 0.0], 0.0).is_err());
    }

    #[test]
    fn power_iteration_matches_diagonal_spectrum() {
        let m = Matrix::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, -7.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let (lo, hi) = eigen_extremes(&m).unwrap();
        assert!((hi - 3.0).abs() < 1e-6, "{hi}");
        assert!((lo + 7.0).abs() < 1e-6, "{lo}");
    }

    #[test]
    fn sphere_sharpness_in_higher_dimension() {
        let s = Sphere { dim: 4 };
        let v = sharpness_at(&s, &s.domain(), &[0.0; 4], 1e-4).unwrap();
        assert!((v - 2.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn non_finite_hessian_is_numeric_error() {
        let m = Matrix::from_rows(&[vec![f64::NAN, 0.0], vec![0.0, 1.0]]);
        assert!(matches!(eigen_extremes(&m), Err(Error::Numeric(_))));
    }
}
