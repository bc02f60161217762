//! Nonparametric comparison of models across datasets: Wilcoxon
//! signed-rank, Friedman ranking with the Iman-Davenport correction, and the
//! Nemenyi critical difference.

mod friedman;
mod nemenyi;
pub mod special;
mod wilcoxon;

use serde::{Deserialize, Serialize};

pub use friedman::{average_ranks, friedman_test, rank_rows, FriedmanResult, ScoreMatrix};
pub use nemenyi::{nemenyi_cd, nemenyi_significant, q_alpha};
pub use wilcoxon::{wilcoxon_signed_rank, wilcoxon_with, Alternative, WilcoxonMethod, EXACT_MAX_N};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: String,
    pub statistic: f64,
    pub p_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alternative: Option<Alternative>,
}

impl TestResult {
    pub(crate) fn new(method: &str, statistic: f64, p_value: f64, alternative: Option<Alternative>) -> Self {
        Self {
            method: method.to_string(),
            statistic,
            p_value,
            alternative,
        }
    }

    pub fn significant(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

/// Ranks `1..=n` in ascending order of `values`, ties sharing their mean
/// rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // Mean of ranks i+1..=j.
        let r = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = r;
        }
        i = j;
    }
    ranks
}
