//! Wilcoxon signed-rank and rank-sum (Mann-Whitney) tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::rank::{average_ranks, tie_groups};
use crate::error::{Error, Result};

/// Largest sample size for which the signed-rank null is enumerated exactly.
pub const SIGNED_RANK_EXACT_MAX_N: usize = 12;
/// Largest combined size for which the rank-sum null is enumerated exactly.
pub const RANK_SUM_EXACT_MAX_N: usize = 20;

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

fn clamp_p(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedRankTest {
    /// Non-zero differences.
    pub n: usize,
    /// Zero differences dropped before ranking.
    pub n_zero: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Normal approximation with tie-corrected variance and continuity correction.
    pub z: f64,
    /// P(W+ >= observed) under the null.
    pub p_greater: f64,
    /// P(W+ <= observed) under the null.
    pub p_less: f64,
    /// The smaller tail.
    pub p_one_sided: f64,
    pub p_two_sided: f64,
    /// One-sided p from the normal approximation, reported in both regimes.
    pub p_normal_one_sided: f64,
    pub exact: bool,
}

/// Signed-rank test on paired differences.
///
/// Zeros are dropped; |d| is ranked with average ranks for ties. For
/// `n <= 12` the null distribution of W+ is enumerated over all 2^n sign
/// assignments (ties included, on the actual average ranks); larger samples
/// use the normal approximation.
pub fn wilcoxon_signed_rank(diffs: &[f64]) -> Result<SignedRankTest> {
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::DegenerateInput("non-finite difference".into()));
    }
    let nonzero: Vec<f64> = diffs.iter().copied().filter(|&d| d != 0.0).collect();
    let n = nonzero.len();
    if n == 0 {
        return Err(Error::DegenerateInput("all differences are zero".into()));
    }
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&abs);
    let w_plus: f64 = nonzero.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;

    let mean = total / 2.0;
    let ties: f64 = tie_groups(&abs).iter().map(|&t| (t * t * t - t) as f64).sum();
    let var = (n * (n + 1) * (2 * n + 1)) as f64 / 24.0 - ties / 48.0;
    let sd = var.sqrt();
    let normal = std_normal();
    let dev = w_plus - mean;
    let z = if dev.abs() <= 0.5 { 0.0 } else { (dev - 0.5 * dev.signum()) / sd };
    let normal_greater = clamp_p(1.0 - normal.cdf((dev - 0.5) / sd));
    let normal_less = clamp_p(normal.cdf((dev + 0.5) / sd));
    let p_normal_one_sided = normal_greater.min(normal_less);

    let exact = n <= SIGNED_RANK_EXACT_MAX_N;
    let (p_greater, p_less) = if exact {
        exact_signed_rank_tails(&ranks, w_plus)
    } else {
        (normal_greater, normal_less)
    };
    let p_one_sided = p_greater.min(p_less);
    Ok(SignedRankTest {
        n,
        n_zero: diffs.len() - n,
        w_plus,
        w_minus,
        z,
        p_greater,
        p_less,
        p_one_sided,
        p_two_sided: clamp_p(2.0 * p_one_sided),
        p_normal_one_sided,
        exact,
    })
}

/// Counts sign assignments by W+ using doubled ranks (always integers).
fn exact_signed_rank_tails(ranks: &[f64], w_plus: f64) -> (f64, f64) {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0u64; max + 1];
    counts[0] = 1;
    for &r in &doubled {
        for s in (r..=max).rev() {
            counts[s] += counts[s - r];
        }
    }
    let observed = (2.0 * w_plus).round() as usize;
    let all = 2f64.powi(ranks.len() as i32);
    let ge: u64 = counts[observed..].iter().sum();
    let le: u64 = counts[..=observed].iter().sum();
    (ge as f64 / all, le as f64 / all)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSumTest {
    pub n1: usize,
    pub n2: usize,
    /// Mann-Whitney U of the first sample.
    pub u: f64,
    /// Tie-corrected normal deviate of U, no continuity correction.
    pub z: f64,
    /// P(U >= observed): first sample tends larger.
    pub p_greater: f64,
    pub p_less: f64,
    pub p_one_sided: f64,
    pub p_two_sided: f64,
    pub p_normal_one_sided: f64,
    pub exact: bool,
}

/// Rank-sum test of `x` against `y`.
///
/// Exact enumeration over all C(n1 + n2, n1) rank assignments when the
/// combined size is at most 20, normal approximation otherwise.
pub fn rank_sum(x: &[f64], y: &[f64]) -> Result<RankSumTest> {
    let (n1, n2) = (x.len(), y.len());
    if n1 == 0 || n2 == 0 {
        return Err(Error::DegenerateInput("rank-sum needs two non-empty samples".into()));
    }
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite value".into()));
    }
    let big_n = n1 + n2;
    let ranks = average_ranks(&pooled);
    let r1: f64 = ranks[..n1].iter().sum();
    let u = r1 - (n1 * (n1 + 1)) as f64 / 2.0;

    let mean = (n1 * n2) as f64 / 2.0;
    let ties: f64 = tie_groups(&pooled).iter().map(|&t| (t * t * t - t) as f64).sum();
    let var = (n1 * n2) as f64 / 12.0 * ((big_n + 1) as f64 - ties / (big_n * (big_n - 1)).max(1) as f64);
    if var <= 0.0 {
        return Err(Error::DegenerateInput("all values are tied".into()));
    }
    let z = (u - mean) / var.sqrt();
    let normal = std_normal();
    let normal_greater = clamp_p(1.0 - normal.cdf(z));
    let normal_less = clamp_p(normal.cdf(z));

    let exact = big_n <= RANK_SUM_EXACT_MAX_N;
    let (p_greater, p_less) = if exact {
        exact_rank_sum_tails(&ranks, n1, r1)
    } else {
        (normal_greater, normal_less)
    };
    let p_one_sided = p_greater.min(p_less);
    Ok(RankSumTest {
        n1,
        n2,
        u,
        z,
        p_greater,
        p_less,
        p_one_sided,
        p_two_sided: clamp_p(2.0 * p_one_sided),
        p_normal_one_sided: normal_greater.min(normal_less),
        exact,
    })
}

/// Counts size-`k` subsets of the pooled ranks by their (doubled) rank sum.
fn exact_rank_sum_tails(ranks: &[f64], k: usize, r1: f64) -> (f64, f64) {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    // counts[j][s]: subsets of size j with doubled sum s.
    let mut counts = vec![vec![0u64; max + 1]; k + 1];
    counts[0][0] = 1;
    for &r in &doubled {
        for j in (1..=k).rev() {
            for s in (r..=max).rev() {
                counts[j][s] += counts[j - 1][s - r];
            }
        }
    }
    let observed = (2.0 * r1).round() as usize;
    let total: u64 = counts[k].iter().sum();
    let ge: u64 = counts[k][observed..].iter().sum();
    let le: u64 = counts[k][..=observed].iter().sum();
    (ge as f64 / total as f64, le as f64 / total as f64)
}
