use statrs::function::beta::beta_reg;

use super::{check_finite, mean, StatTestResult, TestMethod};
use crate::error::{Error, Result};

fn sample_var(xs: &[f64], m: f64) -> f64 {
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Two-sided two-sample t-test: pooled-variance Student when
/// `equal_variance`, Welch otherwise.
pub fn t_test(a: &[f64], b: &[f64], equal_variance: bool) -> Result<StatTestResult> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::arg("t-test needs at least two observations per sample"));
    }
    check_finite(a, "first sample")?;
    check_finite(b, "second sample")?;
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (m1, m2) = (mean(a), mean(b));
    let (v1, v2) = (sample_var(a, m1), sample_var(b, m2));
    let (se, df) = if equal_variance {
        let pooled = ((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / (n1 + n2 - 2.0);
        ((pooled * (1.0 / n1 + 1.0 / n2)).sqrt(), n1 + n2 - 2.0)
    } else {
        let (q1, q2) = (v1 / n1, v2 / n2);
        let df = (q1 + q2).powi(2) / (q1 * q1 / (n1 - 1.0) + q2 * q2 / (n2 - 1.0));
        ((q1 + q2).sqrt(), df)
    };
    let diff = m1 - m2;
    let (statistic, p_value) = if se == 0.0 {
        if diff == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY.copysign(diff), 0.0)
        }
    } else {
        let t = diff / se;
        let p = beta_reg(df / 2.0, 0.5, df / (df + t * t));
        (t, p.clamp(0.0, 1.0))
    };
    Ok(StatTestResult {
        method: TestMethod::TTest { equal_variance },
        statistic,
        p_value,
        n1: a.len(),
        n2: b.len(),
        p_exact: None,
        p_approx: None,
    })
}
