use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Assignment of every row to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FoldPlan {
    /// Held-out rows of `fold`, ascending.
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f as usize == fold)
            .map(|(r, _)| r)
            .collect()
    }

    /// Rows outside `fold`, ascending.
    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f as usize != fold)
            .map(|(r, _)| r)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f as usize] += 1;
        }
        sizes
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Stratified k-fold assignment.
///
/// Rows of each class are shuffled with a seeded generator and dealt
/// round-robin to folds; the dealing position carries over from one class to
/// the next so overall fold sizes stay balanced too.
pub fn stratified_kfold(labels: &[u32], k: usize, seed_value: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Parameter(format!("k must be at least 2, got {k}")));
    }
    if k > labels.len() {
        return Err(Error::Parameter(format!(
            "k = {k} exceeds the number of rows ({})",
            labels.len()
        )));
    }
    let n_classes = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (row, &l) in labels.iter().enumerate() {
        by_class[l as usize].push(row);
    }

    let mut assignments = vec![0u32; labels.len()];
    let mut warnings = Vec::new();
    let mut next = 0usize;
    for (class, rows) in by_class.iter_mut().enumerate() {
        if rows.is_empty() {
            continue;
        }
        if rows.len() < k {
            warnings.push(format!(
                "class {class} has {} rows, fewer than k = {k}",
                rows.len()
            ));
        }
        rows.shuffle(&mut seed::rng_for(seed_value, &[seed::name_key("kfold"), class as u64]));
        for &row in rows.iter() {
            assignments[row] = (next % k) as u32;
            next += 1;
        }
    }
    Ok(FoldPlan {
        k,
        seed: seed_value,
        assignments,
        warnings,
    })
}
