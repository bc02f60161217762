use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-row first- and second-order statistics of the loss.
///
/// `w_sample` multiplies both `g` and `h`; it is 1 except for rows drawn from
/// the low-gradient remainder under one-side sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientPair {
    pub g: f64,
    pub h: f64,
    pub w_sample: f64,
}

impl GradientPair {
    pub fn new(g: f64, h: f64) -> Self {
        debug_assert!(h >= 0.0);
        Self { g, h, w_sample: 1.0 }
    }

    pub fn weighted(g: f64, h: f64, w_sample: f64) -> Self {
        debug_assert!(h >= 0.0 && w_sample > 0.0);
        Self { g, h, w_sample }
    }

    #[inline]
    pub fn g_eff(&self) -> f64 {
        self.g * self.w_sample
    }

    #[inline]
    pub fn h_eff(&self) -> f64 {
        self.h * self.w_sample
    }
}

/// Summed statistics of a set of rows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NodeStats {
    pub g: f64,
    pub h: f64,
    pub count: u32,
}

impl NodeStats {
    #[inline]
    pub fn add(&mut self, g: f64, h: f64) {
        self.g += g;
        self.h += h;
        self.count += 1;
    }

    #[inline]
    pub fn plus(self, other: NodeStats) -> NodeStats {
        NodeStats {
            g: self.g + other.g,
            h: self.h + other.h,
            count: self.count + other.count,
        }
    }

    #[inline]
    pub fn minus(self, other: NodeStats) -> NodeStats {
        NodeStats {
            g: self.g - other.g,
            h: self.h - other.h,
            count: self.count - other.count,
        }
    }
}

#[inline]
pub fn soft_threshold(g: f64, alpha: f64) -> f64 {
    if g > alpha {
        g - alpha
    } else if g < -alpha {
        g + alpha
    } else {
        0.0
    }
}

/// Regularized Newton leaf value `-soft_threshold(G, alpha) / (H + lambda)`.
pub fn leaf_weight(g_sum: f64, h_sum: f64, lambda_l2: f64, alpha_l1: f64) -> Result<f64> {
    let denom = h_sum + lambda_l2;
    if denom <= 0.0 {
        return Err(Error::DegenerateLeaf);
    }
    Ok(-soft_threshold(g_sum, alpha_l1) / denom)
}

/// Second-order split gain, minus the complexity penalty `gamma`.
#[inline]
pub fn split_gain(g_l: f64, h_l: f64, g_r: f64, h_r: f64, lambda_l2: f64, gamma: f64) -> f64 {
    let score = |g: f64, h: f64| g * g / (h + lambda_l2);
    0.5 * (score(g_l, h_l) + score(g_r, h_r) - score(g_l + g_r, h_l + h_r)) - gamma
}
