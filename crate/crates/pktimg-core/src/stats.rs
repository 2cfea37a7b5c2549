//! Classification metrics and the two-sided Mann-Whitney U test.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

/// Fraction of positions where prediction equals truth.
pub fn accuracy(predictions: &[u16], truth: &[u16]) -> f64 {
    assert_eq!(predictions.len(), truth.len());
    assert!(!truth.is_empty(), "accuracy of an empty sample is undefined");
    let correct = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    correct as f64 / truth.len() as f64
}

/// Per-class precision, recall, and true-record count. A class that was
/// never predicted gets precision 0; one with no support gets recall 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub support: usize,
}

/// Row-major `classes x classes` confusion counts: row is truth, column is
/// prediction.
pub fn confusion_matrix(predictions: &[u16], truth: &[u16], classes: usize) -> Vec<usize> {
    assert_eq!(predictions.len(), truth.len());
    let mut matrix = vec![0usize; classes * classes];
    for (&p, &t) in predictions.iter().zip(truth) {
        matrix[usize::from(t) * classes + usize::from(p)] += 1;
    }
    matrix
}

pub fn per_class_metrics(predictions: &[u16], truth: &[u16], classes: usize) -> Vec<ClassMetrics> {
    let matrix = confusion_matrix(predictions, truth, classes);
    (0..classes)
        .map(|c| {
            let tp = matrix[c * classes + c];
            let support: usize = (0..classes).map(|p| matrix[c * classes + p]).sum();
            let predicted: usize = (0..classes).map(|t| matrix[t * classes + c]).sum();
            ClassMetrics {
                precision: if predicted == 0 { 0.0 } else { tp as f64 / predicted as f64 },
                recall: if support == 0 { 0.0 } else { tp as f64 / support as f64 },
                support,
            }
        })
        .collect()
}

/// How the U test p-value was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UMethod {
    /// Exact permutation distribution; used when both samples have at most
    /// [`EXACT_LIMIT`] values and there are no ties.
    Exact,
    /// Normal approximation with tie correction and continuity correction.
    NormalApprox,
}

/// Largest per-sample size for which the exact distribution is used.
pub const EXACT_LIMIT: usize = 12;

/// Outcome of a two-sided Mann-Whitney U test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UTestResult {
    /// The smaller of U1 and U2 (midranks can make it half-integral).
    pub u: f64,
    /// Two-sided p-value in [0, 1].
    pub p_value: f64,
    pub method: UMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UTestError {
    EmptySample,
    NonFiniteValue,
}

impl fmt::Display for UTestError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UTestError::EmptySample => write!(f, "both samples must be non-empty"),
            UTestError::NonFiniteValue => write!(f, "samples must not contain NaN or infinities"),
        }
    }
}

impl core::error::Error for UTestError {}

/// Two-sided Mann-Whitney U test on independent samples `a` and `b`.
///
/// Ranks are midranks over the pooled sample. U1 is computed from the rank
/// sum of `a` and reduced to `min(U1, U2)`. Small tie-free samples get the
/// exact permutation p-value; everything else uses the tie-corrected
/// normal approximation with a 0.5 continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<UTestResult, UTestError> {
    if a.is_empty() || b.is_empty() {
        return Err(UTestError::EmptySample);
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(UTestError::NonFiniteValue);
    }
    let n1 = a.len();
    let n2 = b.len();
    let n = n1 + n2;

    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("values are finite"));

    // midranks, plus tie-group sizes for the variance correction
    let mut r1 = 0.0f64;
    let mut tie_groups: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let run = j - i;
        // ranks are 1-based: positions i..j share the average rank
        let midrank = (i + 1 + j) as f64 / 2.0;
        for item in &pooled[i..j] {
            if item.1 {
                r1 += midrank;
            }
        }
        if run > 1 {
            tie_groups.push(run);
        }
        i = j;
    }

    let u1 = (n1 * n2) as f64 + (n1 * (n1 + 1)) as f64 / 2.0 - r1;
    let u_min = u1.min((n1 * n2) as f64 - u1);

    let tie_free = tie_groups.is_empty();
    if tie_free && n1.max(n2) <= EXACT_LIMIT {
        // u1 is integral here
        let p = exact_two_sided_p(n1, n2, u_min as u64);
        return Ok(UTestResult {
            u: u_min,
            p_value: p,
            method: UMethod::Exact,
        });
    }

    let mean = (n1 * n2) as f64 / 2.0;
    let tie_term: f64 = tie_groups
        .iter()
        .map(|&t| (t * t * t - t) as f64)
        .sum::<f64>()
        / (n * (n - 1)) as f64;
    let variance = (n1 * n2) as f64 / 12.0 * ((n + 1) as f64 - tie_term);
    let p_value = if variance <= 0.0 {
        // every pooled value identical: no evidence of any difference
        1.0
    } else {
        let sigma = crate::math::sqrt(variance);
        let z = ((u_min - mean).abs() - 0.5).max(0.0) / sigma;
        crate::math::erfc(z / core::f64::consts::SQRT_2).min(1.0)
    };
    Ok(UTestResult {
        u: u_min,
        p_value,
        method: UMethod::NormalApprox,
    })
}

/// Exact two-sided p-value `min(1, 2 * P(U <= u))` for tie-free samples,
/// from the permutation distribution of U over all interleavings.
pub fn exact_two_sided_p(n1: usize, n2: usize, u: u64) -> f64 {
    let counts = u_counts(n1, n2);
    let total: u128 = counts.iter().sum();
    debug_assert_eq!(total, binomial(n1 + n2, n1));
    let cap = (u as usize).min(counts.len() - 1);
    let le: u128 = counts[..=cap].iter().sum();
    let p = 2.0 * le as f64 / total as f64;
    p.min(1.0)
}

/// Distribution of U over all interleavings of tie-free samples sized
/// n1 and n2: entry u holds the number of arrangements with statistic u.
///
/// Follows the recurrence `f(i, j, u) = f(i-1, j, u-j) + f(i, j-1, u)`:
/// the pooled minimum is either from sample 1 (sitting below all j sample-2
/// values) or from sample 2.
fn u_counts(n1: usize, n2: usize) -> Vec<u128> {
    let umax = n1 * n2;
    // layer for j = 0: the statistic is always 0
    let mut dp: Vec<Vec<u128>> = vec![vec![0; umax + 1]; n1 + 1];
    for row in dp.iter_mut() {
        row[0] = 1;
    }
    for j in 1..=n2 {
        let mut next: Vec<Vec<u128>> = vec![vec![0; umax + 1]; n1 + 1];
        next[0][0] = 1;
        for i in 1..=n1 {
            for u in 0..=umax {
                let from_sample1 = if u >= j { next[i - 1][u - j] } else { 0 };
                next[i][u] = from_sample1 + dp[i][u];
            }
        }
        dp = next;
    }
    dp.swap_remove(n1)
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        result = result * (n - i) as u128 / (i + 1) as u128;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_counts_matches() {
        assert_eq!(accuracy(&[0, 1, 2, 1], &[0, 1, 1, 1]), 0.75);
        assert_eq!(accuracy(&[5], &[5]), 1.0);
    }

    #[test]
    fn confusion_matrix_layout() {
        let m = confusion_matrix(&[0, 1, 1, 0], &[0, 1, 0, 0], 2);
        // truth 0: predicted 0 twice, predicted 1 once; truth 1: predicted 1 once
        assert_eq!(m, vec![2, 1, 0, 1]);
    }

    #[test]
    fn per_class_handles_absent_predictions() {
        let metrics = per_class_metrics(&[0, 0, 0], &[0, 1, 0], 3);
        assert_eq!(metrics[0].support, 2);
        assert_eq!(metrics[0].recall, 1.0);
        assert!((metrics[0].precision - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(metrics[1].precision, 0.0);
        assert_eq!(metrics[1].recall, 0.0);
        assert_eq!(metrics[2].support, 0);
        assert_eq!(metrics[2].recall, 0.0);
    }

    #[test]
    fn u_test_fully_separated_small_samples() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.method, UMethod::Exact);
        assert_eq!(r.u, 0.0);
        // 2 of C(6,3) = 20 arrangements are at least this extreme
        assert!((r.p_value - 0.1).abs() < 1e-12);
    }

    #[test]
    fn u_test_is_symmetric() {
        let a = [3.1, 0.2, 5.5, 2.2];
        let b = [4.4, 9.9, 1.1];
        let r1 = mann_whitney_u(&a, &b).unwrap();
        let r2 = mann_whitney_u(&b, &a).unwrap();
        assert_eq!(r1.u, r2.u);
        assert_eq!(r1.p_value, r2.p_value);
    }

    #[test]
    fn ties_force_the_normal_path() {
        let r = mann_whitney_u(&[1.0, 2.0], &[2.0, 3.0]).unwrap();
        assert_eq!(r.method, UMethod::NormalApprox);
        assert_eq!(r.u, 0.5);
        // hand-computed: mu = 2, one tie group of 2, sigma^2 = 1.5,
        // z = (1.5 - 0.5) / sqrt(1.5), p = erfc(z / sqrt(2)) ~ 0.4142
        assert!((r.p_value - 0.4142).abs() < 0.005, "p = {}", r.p_value);
    }

    #[test]
    fn identical_samples_give_p_one() {
        let r = mann_whitney_u(&[2.0, 2.0, 2.0], &[2.0, 2.0]).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.method, UMethod::NormalApprox);
    }

    #[test]
    fn large_samples_use_the_normal_path() {
        let a: Vec<f64> = (0..13).map(|i| i as f64 * 2.0).collect();
        let b: Vec<f64> = (0..13).map(|i| i as f64 * 2.0 + 1.0).collect();
        let r = mann_whitney_u(&a, &b).unwrap();
        assert_eq!(r.method, UMethod::NormalApprox);
        assert!(r.p_value > 0.5, "interleaved samples are not separated");
    }

    #[test]
    fn rejects_degenerate_input() {
        assert_eq!(mann_whitney_u(&[], &[1.0]).unwrap_err(), UTestError::EmptySample);
        assert_eq!(
            mann_whitney_u(&[1.0], &[f64::NAN]).unwrap_err(),
            UTestError::NonFiniteValue
        );
    }

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(6, 3), 20);
        assert_eq!(binomial(24, 12), 2_704_156);
        assert_eq!(binomial(5, 0), 1);
    }

    #[test]
    fn exact_distribution_tiny_cases() {
        // n1 = 2, n2 = 1 has three arrangements with U = 0, 1, 2
        assert!((exact_two_sided_p(2, 1, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(exact_two_sided_p(2, 1, 1), 1.0, "clipped at 1");
        assert_eq!(exact_two_sided_p(1, 1, 0), 1.0);
        // mid-distribution clipping for the fully balanced case
        assert_eq!(exact_two_sided_p(3, 3, 9), 1.0);
    }
}
