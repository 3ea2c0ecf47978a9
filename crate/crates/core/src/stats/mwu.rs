use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::{check_finite, StatTestResult, TestMethod};
use crate::error::{Error, Result};

/// Auto mode uses the exact distribution up to this many observations per sample.
pub const EXACT_AUTO_MAX: usize = 10;

/// Largest combined sample the exact distribution is computed for
/// (C(128, 64) still fits the u128 counts).
pub const EXACT_MAX_TOTAL: usize = 128;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MwuMode {
    #[default]
    Auto,
    Exact,
    Approx,
}

/// 1-based ranks; tied values share the mean of their rank span.
pub fn rank_with_ties(values: &[f64]) -> Result<Vec<f64>> {
    Ok(doubled_ranks(values)?.into_iter().map(|r| r as f64 / 2.0).collect())
}

/// Twice the midranks, which are always integers.
fn doubled_ranks(values: &[f64]) -> Result<Vec<u64>> {
    if values.is_empty() {
        return Err(Error::arg("cannot rank an empty sample"));
    }
    check_finite(values, "sample")?;
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        // positions i..=j hold ranks i+1..=j+1
        let twice_mid = (i + 1 + j + 1) as u64;
        for &k in &idx[i..=j] {
            ranks[k] = twice_mid;
        }
        i = j + 1;
    }
    Ok(ranks)
}

fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Two-sided p from the exact permutation distribution of the rank sum of a
/// sample of size `n1` drawn from `ranks2` (doubled ranks of the pooled data).
fn exact_p(ranks2: &[u64], n1: usize, observed: u64) -> f64 {
    let max_sum: u64 = ranks2.iter().sum();
    let width = max_sum as usize + 1;
    // counts[k][s]: subsets of size k with doubled rank sum s
    let mut counts = vec![vec![0u128; width]; n1 + 1];
    counts[0][0] = 1;
    for (seen, &r) in ranks2.iter().enumerate() {
        let r = r as usize;
        for k in (1..=n1.min(seen + 1)).rev() {
            let (lo, hi) = counts.split_at_mut(k);
            let prev = &lo[k - 1];
            let cur = &mut hi[0];
            for s in (r..width).rev() {
                cur[s] += prev[s - r];
            }
        }
    }
    let dist = &counts[n1];
    let total: u128 = dist.iter().sum();
    let obs = observed as usize;
    let below: u128 = dist[..=obs].iter().sum();
    let above: u128 = dist[obs..].iter().sum();
    let tail = below.min(above) as f64 / total as f64;
    (2.0 * tail).min(1.0)
}

/// Mann-Whitney U test of `a` against `b`. The reported statistic is U for
/// sample `a`.
pub fn mann_whitney_u(a: &[f64], b: &[f64], mode: MwuMode) -> Result<StatTestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::arg("Mann-Whitney U needs two non-empty samples"));
    }
    let (n1, n2) = (a.len(), b.len());
    let n = n1 + n2;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks2 = doubled_ranks(&pooled)?;
    let sum2_a: u64 = ranks2[..n1].iter().sum();
    let u_a = sum2_a as f64 / 2.0 - (n1 * (n1 + 1)) as f64 / 2.0;

    let mut tie_term = 0.0;
    let mut sorted = ranks2.clone();
    sorted.sort_unstable();
    for group in sorted.chunk_by(|x, y| x == y) {
        let t = group.len() as f64;
        tie_term += t * t * t - t;
    }
    let has_ties = tie_term > 0.0;

    let approx = || {
        let (f1, f2, nf) = (n1 as f64, n2 as f64, n as f64);
        let mu = f1 * f2 / 2.0;
        let var = f1 * f2 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)).max(1.0));
        if var <= 0.0 {
            return 1.0;
        }
        let z = ((u_a - mu).abs() - 0.5) / var.sqrt();
        (2.0 * normal_sf(z)).min(1.0)
    };
    let exact = || exact_p(&ranks2, n1, sum2_a);

    let (use_exact, p_exact, p_approx) = match mode {
        MwuMode::Exact => {
            if n > EXACT_MAX_TOTAL {
                return Err(Error::arg(format!(
                    "exact Mann-Whitney U supports at most {EXACT_MAX_TOTAL} observations"
                )));
            }
            (true, Some(exact()), None)
        }
        MwuMode::Approx => (false, None, Some(approx())),
        MwuMode::Auto => {
            let small = n1 <= EXACT_AUTO_MAX && n2 <= EXACT_AUTO_MAX && !has_ties;
            let pe = (n <= EXACT_MAX_TOTAL).then(exact);
            (small, pe, Some(approx()))
        }
    };
    let p_value = if use_exact { p_exact.unwrap() } else { p_approx.unwrap() };
    Ok(StatTestResult {
        method: TestMethod::MannWhitneyU { exact: use_exact },
        statistic: u_a,
        p_value,
        n1,
        n2,
        p_exact,
        p_approx,
    })
}
