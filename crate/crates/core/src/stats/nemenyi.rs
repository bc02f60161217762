use crate::error::{Error, Result};

/// Critical values `q_α` for k = 2..=20 models, α = 0.05.
const Q_05: [f64; 19] = [
    1.960, 2.343, 2.569, 2.728, 2.850, 2.949, 3.031, 3.102, 3.164, 3.219, 3.268, 3.313, 3.354,
    3.391, 3.426, 3.458, 3.489, 3.517, 3.544,
];
/// Same for α = 0.10.
const Q_10: [f64; 19] = [
    1.645, 2.052, 2.291, 2.459, 2.589, 2.693, 2.780, 2.855, 2.920, 2.978, 3.030, 3.077, 3.120,
    3.159, 3.196, 3.230, 3.261, 3.291, 3.319,
];

pub fn q_alpha(k: usize, alpha: f64) -> Result<f64> {
    let table = if (alpha - 0.05).abs() < 1e-9 {
        &Q_05
    } else if (alpha - 0.10).abs() < 1e-9 {
        &Q_10
    } else {
        return Err(Error::Parameter(format!("alpha must be 0.05 or 0.10, got {alpha}")));
    };
    if !(2..=20).contains(&k) {
        return Err(Error::Parameter(format!("Nemenyi table covers 2 to 20 models, got {k}")));
    }
    Ok(table[k - 2])
}

/// Critical difference `q_α(k) · sqrt(k(k+1) / 6D)` between mean ranks.
pub fn nemenyi_cd(k: usize, datasets: usize, alpha: f64) -> Result<f64> {
    if datasets == 0 {
        return Err(Error::Parameter("at least one dataset is required".into()));
    }
    let q = q_alpha(k, alpha)?;
    let kf = k as f64;
    Ok(q * (kf * (kf + 1.0) / (6.0 * datasets as f64)).sqrt())
}

/// Pairwise significance: `|R_i - R_j| > cd`.
pub fn nemenyi_significant(mean_ranks: &[f64], cd: f64) -> Vec<Vec<bool>> {
    mean_ranks
        .iter()
        .map(|a| mean_ranks.iter().map(|b| (a - b).abs() > cd).collect())
        .collect()
}
