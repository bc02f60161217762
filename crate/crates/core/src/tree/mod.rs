//! Regression tree base learner.
//!
//! Trees are fitted to per-row gradient pairs with the second-order gain,
//! using exact or histogram split search and one of three growth
//! strategies. Internal nodes keep their raw split gain so the tree can be
//! pruned against a minimum loss reduction afterwards.

mod binning;
mod column;
mod gain;
mod grow;
mod prune;
mod split;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};

pub use binning::{BinMapper, BinnedColumn};
pub use gain::{leaf_weight, soft_threshold, split_gain, GradientPair, NodeStats};
pub use grow::{fit_tree, FittedTree, TreeBuilder};
pub use prune::gamma_prune;
pub use split::{best_split_exact, best_split_histogram, SplitCandidate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Growth {
    /// Expand every splittable node level by level up to `max_depth`.
    DepthWise,
    /// Repeatedly split the frontier leaf with the largest gain.
    LeafWise,
    /// One shared (feature, threshold) per level.
    Oblivious,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMethod {
    Exact,
    Histogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub growth: Growth,
    pub split_method: SplitMethod,
    pub max_depth: usize,
    /// Leaf cap for leaf-wise growth.
    pub num_leaves: usize,
    /// Nodes with fewer rows are not split.
    pub min_samples_split: usize,
    /// Minimum loss reduction; splits with a smaller raw gain are pruned.
    pub gamma: f64,
    pub lambda_l2: f64,
    pub alpha_l1: f64,
    pub max_bins: usize,
    pub sparsity_aware: bool,
    /// Fraction of the tree's features drawn per node (per level for
    /// oblivious trees).
    pub colsample_bynode: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            growth: Growth::DepthWise,
            split_method: SplitMethod::Exact,
            max_depth: 3,
            num_leaves: 31,
            min_samples_split: 2,
            gamma: 0.0,
            lambda_l2: 0.0,
            alpha_l1: 0.0,
            max_bins: 256,
            sparsity_aware: false,
            colsample_bynode: 1.0,
        }
    }
}

impl TreeParams {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Parameter(m));
        if self.max_depth < 1 {
            return fail("max_depth must be at least 1".into());
        }
        if self.num_leaves < 2 {
            return fail("num_leaves must be at least 2".into());
        }
        if self.max_bins < 2 {
            return fail("max_bins must be at least 2".into());
        }
        if self.min_samples_split < 2 {
            return fail("min_samples_split must be at least 2".into());
        }
        for (name, v) in [
            ("gamma", self.gamma),
            ("lambda", self.lambda_l2),
            ("alpha", self.alpha_l1),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return fail(format!("{name} must be a finite nonnegative number, got {v}"));
            }
        }
        if !(self.colsample_bynode > 0.0 && self.colsample_bynode <= 1.0) {
            return fail(format!(
                "colsample_bynode must lie in (0, 1], got {}",
                self.colsample_bynode
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NodeKind {
    Leaf {
        weight: f64,
    },
    Split {
        feature: u32,
        threshold: f64,
        default_left: bool,
        left: u32,
        right: u32,
        /// Raw gain recorded when the split was chosen.
        gain: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub depth: u32,
    pub stats: NodeStats,
    #[serde(flatten)]
    pub kind: NodeKind,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }
}

/// Binary regression tree stored as a node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
    sparsity_aware: bool,
    lambda_l2: f64,
    alpha_l1: f64,
}

impl RegressionTree {
    pub fn single_leaf(weight: f64) -> Self {
        Self {
            nodes: vec![Node {
                depth: 0,
                stats: NodeStats::default(),
                kind: NodeKind::Leaf { weight },
            }],
            sparsity_aware: false,
            lambda_l2: 0.0,
            alpha_l1: 0.0,
        }
    }

    pub(crate) fn from_nodes(nodes: Vec<Node>, params: &TreeParams) -> Self {
        Self {
            nodes,
            sparsity_aware: params.sparsity_aware,
            lambda_l2: params.lambda_l2,
            alpha_l1: params.alpha_l1,
        }
    }

    /// Rebuilds a tree from serialized parts, checking node links.
    pub fn from_parts(
        nodes: Vec<Node>,
        sparsity_aware: bool,
        lambda_l2: f64,
        alpha_l1: f64,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Schema("tree has no nodes".into()));
        }
        for n in &nodes {
            if let NodeKind::Split { left, right, .. } = n.kind {
                if left as usize >= nodes.len() || right as usize >= nodes.len() {
                    return Err(Error::Schema("tree child index out of range".into()));
                }
            }
        }
        Ok(Self {
            nodes,
            sparsity_aware,
            lambda_l2,
            alpha_l1,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn sparsity_aware(&self) -> bool {
        self.sparsity_aware
    }

    pub fn lambda_l2(&self) -> f64 {
        self.lambda_l2
    }

    pub fn alpha_l1(&self) -> f64 {
        self.alpha_l1
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn n_internal(&self) -> usize {
        self.nodes.len() - self.n_leaves()
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.depth as usize).max().unwrap_or(0)
    }

    pub fn leaf_weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(|n| match n.kind {
            NodeKind::Leaf { weight } => Some(weight),
            NodeKind::Split { .. } => None,
        })
    }

    pub fn max_abs_leaf(&self) -> f64 {
        self.leaf_weights().fold(0.0, |m, w| m.max(w.abs()))
    }

    pub(crate) fn set_leaf_weight(&mut self, node: usize, weight: f64) {
        if let NodeKind::Leaf { weight: w } = &mut self.nodes[node].kind {
            *w = weight;
        }
    }

    #[inline]
    fn goes_left(&self, value: f64, threshold: f64, default_left: bool) -> bool {
        if value.is_nan() {
            if self.sparsity_aware {
                default_left
            } else {
                0.0 <= threshold
            }
        } else {
            value <= threshold
        }
    }

    /// Index of the leaf reached by `row` (missing values as `NaN`).
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        let mut idx = 0usize;
        loop {
            match self.nodes[idx].kind {
                NodeKind::Leaf { .. } => return idx,
                NodeKind::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                    ..
                } => {
                    let go_left = self.goes_left(row[feature as usize], threshold, default_left);
                    idx = if go_left { left } else { right } as usize;
                }
            }
        }
    }

    /// Leaf value for one materialized row.
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(row)].kind {
            NodeKind::Leaf { weight } => weight,
            NodeKind::Split { .. } => unreachable!("leaf_index returns leaves"),
        }
    }

    /// Leaf reached by row `row` of `data`, reading columns in place.
    pub fn leaf_index_in(&self, data: &Dataset, row: usize) -> usize {
        let mut idx = 0usize;
        loop {
            match self.nodes[idx].kind {
                NodeKind::Leaf { .. } => return idx,
                NodeKind::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                    ..
                } => {
                    let view = column::ColumnView::new(data.column(feature as usize), self.sparsity_aware);
                    let go_left = match view.and_then(|v| v.value(row)) {
                        Some(v) => v <= threshold,
                        None => default_left,
                    };
                    idx = if go_left { left } else { right } as usize;
                }
            }
        }
    }

    pub fn predict_in(&self, data: &Dataset, row: usize) -> f64 {
        match self.nodes[self.leaf_index_in(data, row)].kind {
            NodeKind::Leaf { weight } => weight,
            NodeKind::Split { .. } => unreachable!("leaf_index_in returns leaves"),
        }
    }

    /// Distinct (feature, threshold) pairs used by internal nodes at each
    /// depth.
    pub fn splits_by_depth(&self) -> Vec<Vec<(u32, f64)>> {
        let mut levels: Vec<Vec<(u32, f64)>> = vec![Vec::new(); self.depth() + 1];
        for n in &self.nodes {
            if let NodeKind::Split {
                feature, threshold, ..
            } = n.kind
            {
                let level = &mut levels[n.depth as usize];
                if !level.iter().any(|&(f, t)| f == feature && t == threshold) {
                    level.push((feature, threshold));
                }
            }
        }
        levels
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::MISSING;

    fn stump(default_left: bool) -> RegressionTree {
        let leaf = |w: f64| Node {
            depth: 1,
            stats: NodeStats::default(),
            kind: NodeKind::Leaf { weight: w },
        };
        RegressionTree {
            nodes: vec![
                Node {
                    depth: 0,
                    stats: NodeStats::default(),
                    kind: NodeKind::Split {
                        feature: 0,
                        threshold: 2.5,
                        default_left,
                        left: 1,
                        right: 2,
                        gain: 1.0,
                    },
                },
                leaf(-1.0),
                leaf(1.0),
            ],
            sparsity_aware: true,
            lambda_l2: 0.0,
            alpha_l1: 0.0,
        }
    }

    #[test]
    fn single_leaf_predicts_constant() {
        let t = RegressionTree::single_leaf(0.3);
        assert_eq!(t.predict(&[1.0, 2.0]), 0.3);
        assert_eq!(t.predict(&[MISSING]), 0.3);
    }

    #[test]
    fn threshold_is_inclusive_on_the_left() {
        let t = stump(true);
        assert_eq!(t.predict(&[2.5]), -1.0);
        assert_eq!(t.predict(&[2.6]), 1.0);
    }

    #[test]
    fn missing_follows_default_direction() {
        assert_eq!(stump(false).predict(&[MISSING]), 1.0);
        assert_eq!(stump(true).predict(&[MISSING]), -1.0);
    }

    #[test]
    fn missing_reads_as_zero_without_sparsity_awareness() {
        let mut t = stump(false);
        t.sparsity_aware = false;
        assert_eq!(t.predict(&[MISSING]), -1.0);
    }

    #[test]
    fn params_validation() {
        assert!(TreeParams::default().validate().is_ok());
        for bad in [
            TreeParams { max_depth: 0, ..Default::default() },
            TreeParams { num_leaves: 1, ..Default::default() },
            TreeParams { max_bins: 1, ..Default::default() },
            TreeParams { lambda_l2: -1.0, ..Default::default() },
            TreeParams { colsample_bynode: 0.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn json_round_trip() {
        let t = stump(false);
        let s = serde_json::to_string(&t).unwrap();
        assert!(s.contains("\"type\":\"split\""));
        let back: RegressionTree = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
