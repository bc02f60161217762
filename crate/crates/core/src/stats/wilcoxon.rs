use serde::{Deserialize, Serialize};

use super::special::normal_sf;
use super::{midranks, TestResult};
use crate::error::{check_lengths, Result};

/// Largest sample size (after dropping zero differences) for which the
/// exact null distribution is used.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    /// `a` tends to exceed `b`.
    Greater,
    Less,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WilcoxonMethod {
    /// Exact up to [`EXACT_MAX_N`] nonzero differences, normal beyond.
    Auto,
    Exact,
    Normal,
}

/// Wilcoxon signed-rank test of paired samples; the statistic is `W+`.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], alternative: Alternative) -> Result<TestResult> {
    wilcoxon_with(a, b, alternative, WilcoxonMethod::Auto)
}

pub fn wilcoxon_with(
    a: &[f64],
    b: &[f64],
    alternative: Alternative,
    method: WilcoxonMethod,
) -> Result<TestResult> {
    check_lengths(a.len(), b.len())?;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    let exact = match method {
        WilcoxonMethod::Auto => n <= EXACT_MAX_N,
        WilcoxonMethod::Exact => true,
        WilcoxonMethod::Normal => false,
    };
    let tag = if exact { "wilcoxon-exact" } else { "wilcoxon-normal" };
    if n == 0 {
        return Ok(TestResult::new(tag, 0.0, 1.0, Some(alternative)));
    }
    let ranks = midranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let p = if exact {
        exact_p(&ranks, w_plus, alternative)
    } else {
        normal_p(&ranks, w_plus, alternative)
    };
    Ok(TestResult::new(tag, w_plus, p.min(1.0), Some(alternative)))
}

/// Exact tail probability over all `2^n` sign assignments, counted by
/// subset sums of the doubled (integer) mid-ranks.
fn exact_p(ranks: &[f64], w_plus: f64, alternative: Alternative) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0f64; total + 1];
    counts[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            counts[s] += counts[s - r];
        }
    }
    let all = 2f64.powi(ranks.len() as i32);
    let observed = (2.0 * w_plus).round() as usize;
    let upper = counts[observed..].iter().sum::<f64>() / all;
    let lower = counts[..=observed].iter().sum::<f64>() / all;
    match alternative {
        Alternative::Greater => upper,
        Alternative::Less => lower,
        Alternative::TwoSided => 2.0 * upper.min(lower),
    }
}

fn normal_p(ranks: &[f64], w_plus: f64, alternative: Alternative) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&r| r == sorted[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let sd = var.sqrt();
    match alternative {
        Alternative::Greater => normal_sf((w_plus - mean - 0.5) / sd),
        Alternative::Less => normal_sf((mean - w_plus - 0.5) / sd),
        Alternative::TwoSided => 2.0 * normal_sf(((w_plus - mean).abs() - 0.5) / sd),
    }
}
