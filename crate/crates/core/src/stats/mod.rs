//! Two-sample tests and summary statistics for comparing model populations.

mod mwu;
mod ttest;

use serde::{Deserialize, Serialize};

pub use mwu::{mann_whitney_u, rank_with_ties, MwuMode, EXACT_AUTO_MAX, EXACT_MAX_TOTAL};
pub use ttest::t_test;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TestMethod {
    MannWhitneyU { exact: bool },
    TTest { equal_variance: bool },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    pub method: TestMethod,
    pub statistic: f64,
    pub p_value: f64,
    pub n1: usize,
    pub n2: usize,
    /// Both Mann-Whitney p-values, when computed (Auto mode).
    pub p_exact: Option<f64>,
    pub p_approx: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub median: f64,
    /// Population standard deviation.
    pub std: f64,
    pub n: usize,
}

fn check_finite(xs: &[f64], what: &str) -> Result<()> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::arg(format!("{what} contains non-finite values")));
    }
    Ok(())
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn summarize(values: &[f64]) -> Result<SummaryStats> {
    if values.is_empty() {
        return Err(Error::arg("cannot summarize an empty sample"));
    }
    check_finite(values, "sample")?;
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    };
    let m = mean(&v);
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n as f64;
    Ok(SummaryStats {
        median,
        std: var.sqrt(),
        n,
    })
}

pub fn accuracy(preds: &[usize], labels: &[usize]) -> Result<f64> {
    if preds.len() != labels.len() || preds.is_empty() {
        return Err(Error::arg("predictions and labels must have the same non-zero length"));
    }
    let hits = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Unweighted mean of per-class F1. A class with no true positives scores 0,
/// including classes absent from both predictions and labels.
pub fn macro_f1(preds: &[usize], labels: &[usize], num_classes: usize) -> Result<f64> {
    if preds.len() != labels.len() || preds.is_empty() {
        return Err(Error::arg("predictions and labels must have the same non-zero length"));
    }
    if num_classes == 0 {
        return Err(Error::arg("num_classes must be positive"));
    }
    if let Some(c) = preds.iter().chain(labels).find(|&&c| c >= num_classes) {
        return Err(Error::arg(format!("class id {c} out of range for {num_classes} classes")));
    }
    let mut tp = vec![0usize; num_classes];
    let mut predicted = vec![0usize; num_classes];
    let mut actual = vec![0usize; num_classes];
    for (&p, &l) in preds.iter().zip(labels) {
        predicted[p] += 1;
        actual[l] += 1;
        if p == l {
            tp[p] += 1;
        }
    }
    let total: f64 = (0..num_classes)
        .map(|c| {
            if tp[c] == 0 {
                return 0.0;
            }
            let precision = tp[c] as f64 / predicted[c] as f64;
            let recall = tp[c] as f64 / actual[c] as f64;
            2.0 * precision * recall / (precision + recall)
        })
        .sum();
    Ok(total / num_classes as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn summary_examples() {
        let s = summarize(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.median, 2.0);
        assert_abs_diff_eq!(s.std, (2.0f64 / 3.0).sqrt(), epsilon = 1e-15);
        let s = summarize(&[5.0]).unwrap();
        assert_eq!((s.median, s.std, s.n), (5.0, 0.0, 1));
        assert_eq!(summarize(&[3.0, 1.0]).unwrap().median, 2.0);
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 0], &[0, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[0, 1, 1, 0], &[0, 1, 0, 0]).unwrap(), 0.75);
        assert!(accuracy(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn macro_f1_examples() {
        assert_eq!(macro_f1(&[0, 1, 2, 3], &[0, 1, 2, 3], 4).unwrap(), 1.0);
        assert_abs_diff_eq!(macro_f1(&[0, 0, 0, 0], &[0, 0, 1, 1], 2).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert!(macro_f1(&[0, 2], &[0, 1], 2).is_err());
        // a class nobody predicts or holds still counts as zero
        assert_eq!(macro_f1(&[0, 1], &[0, 1], 3).unwrap(), 2.0 / 3.0);
    }

    proptest! {
        #[test]
        fn f1_in_unit_interval(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..60)) {
            let (p, l): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
            let f = macro_f1(&p, &l, 4).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
            let a = accuracy(&p, &l).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
