use std::io::Read;

use serde::{Deserialize, Serialize};

use super::special::{chi_square_sf, f_sf};
use super::{midranks, TestResult};
use crate::error::{Error, Result};

/// Mean metric values, one row per dataset and one column per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreMatrix {
    datasets: Vec<String>,
    models: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl ScoreMatrix {
    pub fn new(datasets: Vec<String>, models: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if datasets.len() < 2 || models.len() < 2 {
            return Err(Error::Parameter(format!(
                "a score matrix needs at least 2 datasets and 2 models, got {} x {}",
                datasets.len(),
                models.len()
            )));
        }
        if values.len() != datasets.len() {
            return Err(Error::LengthMismatch {
                expected: datasets.len(),
                actual: values.len(),
            });
        }
        for (d, row) in datasets.iter().zip(&values) {
            if row.len() != models.len() {
                return Err(Error::LengthMismatch {
                    expected: models.len(),
                    actual: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parameter(format!("dataset '{d}' has a missing or non-finite score")));
            }
        }
        Ok(Self {
            datasets,
            models,
            values,
        })
    }

    /// Reads a CSV with a header row of model names (the first header cell
    /// names the dataset column) and one row per dataset.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let models: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
        let mut datasets = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            datasets.push(rec.get(0).unwrap_or_default().to_string());
            let row = rec
                .iter()
                .skip(1)
                .enumerate()
                .map(|(j, cell)| {
                    cell.parse::<f64>().map_err(|_| Error::Ingestion {
                        row: i + 1,
                        column: models.get(j).cloned().unwrap_or_default(),
                        message: format!("'{cell}' is not a number"),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            values.push(row);
        }
        Self::new(datasets, models, values)
    }

    pub fn datasets(&self) -> &[String] {
        &self.datasets
    }

    pub fn models(&self) -> &[String] {
        &self.models
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn column(&self, model: usize) -> Vec<f64> {
        self.values.iter().map(|r| r[model]).collect()
    }
}

/// Per-dataset ranks; the best model gets rank `k` when `higher_better`.
pub fn rank_rows(scores: &ScoreMatrix, higher_better: bool) -> Vec<Vec<f64>> {
    scores
        .values
        .iter()
        .map(|row| {
            if higher_better {
                midranks(row)
            } else {
                midranks(&row.iter().map(|v| -v).collect::<Vec<_>>())
            }
        })
        .collect()
}

pub fn average_ranks(scores: &ScoreMatrix, higher_better: bool) -> Vec<f64> {
    let ranks = rank_rows(scores, higher_better);
    let d = ranks.len() as f64;
    (0..scores.models.len())
        .map(|j| ranks.iter().map(|r| r[j]).sum::<f64>() / d)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub mean_ranks: Vec<f64>,
    pub chi_square: TestResult,
    /// `None` when the rankings agree perfectly and the F statistic is
    /// unbounded.
    pub iman_davenport: Option<TestResult>,
}

pub fn friedman_test(scores: &ScoreMatrix, higher_better: bool) -> FriedmanResult {
    let mean_ranks = average_ranks(scores, higher_better);
    let k = mean_ranks.len() as f64;
    let d = scores.datasets.len() as f64;
    let sum_sq: f64 = mean_ranks.iter().map(|r| r * r).sum();
    let chi2 = (12.0 * d / (k * (k + 1.0)) * sum_sq - 3.0 * d * (k + 1.0)).max(0.0);
    let chi_square = TestResult::new("friedman-chi-square", chi2, chi_square_sf(chi2, k - 1.0), None);
    let denom = d * (k - 1.0) - chi2;
    let iman_davenport = (denom > 1e-12).then(|| {
        let f = (d - 1.0) * chi2 / denom;
        let p = f_sf(f, k - 1.0, (k - 1.0) * (d - 1.0));
        TestResult::new("iman-davenport", f, p, None)
    });
    FriedmanResult {
        mean_ranks,
        chi_square,
        iman_davenport,
    }
}
