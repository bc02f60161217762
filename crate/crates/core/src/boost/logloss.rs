//! Binomial log-loss quantities with labels in {-1, +1} and margins `F`,
//! where `p(+1 | x) = 1 / (1 + exp(-2F))`.

use crate::error::{Error, Result};

/// Margins are clamped to this range before exponentiation.
pub const MARGIN_CLAMP: f64 = 36.0;

#[inline]
pub(crate) fn clamp_margin(f: f64) -> f64 {
    f.clamp(-MARGIN_CLAMP, MARGIN_CLAMP)
}

/// Initial margin `½ ln((1 + ȳ) / (1 - ȳ))`.
pub fn init_f0(labels: &[f64]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Degenerate("no labels".into()));
    }
    let mean = labels.iter().sum::<f64>() / labels.len() as f64;
    if mean.abs() >= 1.0 {
        return Err(Error::Degenerate(
            "both classes must be present to initialize the margin".into(),
        ));
    }
    Ok(0.5 * ((1.0 + mean) / (1.0 - mean)).ln())
}

/// `ỹ = 2y / (1 + exp(2yF))`, the negative gradient of the loss.
#[inline]
pub fn pseudo_residual(y: f64, f: f64) -> f64 {
    2.0 * y / (1.0 + (2.0 * y * clamp_margin(f)).exp())
}

pub fn pseudo_residuals(labels: &[f64], margins: &[f64]) -> Vec<f64> {
    labels
        .iter()
        .zip(margins)
        .map(|(&y, &f)| pseudo_residual(y, f))
        .collect()
}

/// Gradient pair equivalent to a residual: `g = -ỹ`, `h = |ỹ|(2 - |ỹ|)`.
#[inline]
pub fn residual_to_gradient(residual: f64) -> (f64, f64) {
    let a = residual.abs();
    (-residual, (a * (2.0 - a)).max(0.0))
}

/// Newton leaf value `Σỹ / Σ|ỹ|(2 - |ỹ|)`; zero when the denominator
/// vanishes.
pub fn leaf_gamma_logloss(residuals: &[f64]) -> f64 {
    let num: f64 = residuals.iter().sum();
    let den: f64 = residuals.iter().map(|r| r.abs() * (2.0 - r.abs())).sum();
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Per-row loss `ln(1 + exp(-2yF))`, computed stably.
#[inline]
pub fn row_loss(y: f64, f: f64) -> f64 {
    let z = -2.0 * y * clamp_margin(f);
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `p(+1)` for margin `f`.
#[inline]
pub fn positive_probability(f: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * clamp_margin(f)).exp())
}
