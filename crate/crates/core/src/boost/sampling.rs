//! Row and feature subsampling for one boosting iteration.

use rand::seq::index::sample;

use crate::error::{Error, Result};
use crate::seed::Rng;

/// `ceil(rate * n)` that ignores floating noise such as `0.2 * 100`.
fn ceil_count(rate: f64, n: usize) -> usize {
    let exact = rate * n as f64;
    let rounded = exact.round();
    let k = if (exact - rounded).abs() < 1e-9 {
        rounded
    } else {
        exact.ceil()
    };
    (k as usize).min(n)
}

fn round_count(rate: f64, n: usize) -> usize {
    ((rate * n as f64).round() as usize).clamp(1, n.max(1))
}

/// Gradient-based one-side sampling.
///
/// Keeps the `ceil(a·N)` rows with the largest `|g|` (ties by row index)
/// with weight 1, then draws `ceil(b·N)` of the remaining rows uniformly
/// without replacement with weight `(1 - a) / b`. Returned rows are
/// ascending with aligned weights.
pub fn goss_sample(gradients: &[f64], top_rate: f64, other_rate: f64, rng: &mut Rng) -> Result<(Vec<u32>, Vec<f64>)> {
    if !(top_rate >= 0.0 && other_rate > 0.0 && top_rate + other_rate <= 1.0 + 1e-12) {
        return Err(Error::Parameter(format!(
            "GOSS rates need a >= 0, b > 0, a + b <= 1 (got a = {top_rate}, b = {other_rate})"
        )));
    }
    let n = gradients.len();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by(|&i, &j| {
        gradients[j as usize]
            .abs()
            .total_cmp(&gradients[i as usize].abs())
            .then(i.cmp(&j))
    });
    let n_top = ceil_count(top_rate, n);
    let rest = &order[n_top..];
    let n_other = ceil_count(other_rate, n).min(rest.len());
    let amplify = (1.0 - top_rate) / other_rate;

    let mut picked: Vec<(u32, f64)> = order[..n_top].iter().map(|&r| (r, 1.0)).collect();
    picked.extend(
        sample(rng, rest.len(), n_other)
            .into_iter()
            .map(|i| (rest[i], amplify)),
    );
    picked.sort_unstable_by_key(|p| p.0);
    Ok(picked.into_iter().unzip())
}

/// Rows drawn without replacement, ascending.
pub fn subsample_rows(n: usize, fraction: f64, rng: &mut Rng) -> Vec<u32> {
    if fraction >= 1.0 {
        return (0..n as u32).collect();
    }
    let k = round_count(fraction, n);
    let mut rows: Vec<u32> = sample(rng, n, k).into_iter().map(|i| i as u32).collect();
    rows.sort_unstable();
    rows
}

/// Feature indices drawn without replacement, ascending.
pub fn subsample_features(n: usize, fraction: f64, rng: &mut Rng) -> Vec<usize> {
    if fraction >= 1.0 {
        return (0..n).collect();
    }
    let k = round_count(fraction, n);
    let mut feats: Vec<usize> = sample(rng, n, k).into_vec();
    feats.sort_unstable();
    feats
}
