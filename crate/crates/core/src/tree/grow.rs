use super::binning::BinnedColumn;
use super::column::ColumnView;
use super::gain::{leaf_weight, split_gain, GradientPair, NodeStats};
use super::split::{
    admissible, boundary_score, effective_grads, node_stats, scan_node, Boundary, Scratch,
    SplitCandidate, Thresholds,
};
use super::{Growth, Node, NodeKind, RegressionTree, SplitMethod, TreeParams};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed;

/// Tree fitting context for one training fold.
///
/// Every feature is binned once here, over every row of `data`, and reused
/// by each tree fitted with this builder. Exact search gives each distinct
/// value its own bin.
pub struct TreeBuilder<'a> {
    data: &'a Dataset,
    params: TreeParams,
    views: Vec<ColumnView<'a>>,
    binned: Vec<BinnedColumn>,
    /// Per feature: rows with a present value, sorted by (bin, row).
    order: Vec<Vec<u32>>,
    /// Per feature: rows taking the default direction, ascending.
    missing_rows: Vec<Vec<u32>>,
}

/// A fitted tree together with the training rows that reached each leaf.
#[derive(Debug, Clone)]
pub struct FittedTree {
    pub tree: RegressionTree,
    pub leaf_rows: Vec<(usize, Vec<u32>)>,
}

const NO_SLOT: u32 = u32::MAX;

/// Counting sort of the present rows of one column by bin.
fn sort_by_bin(col: &BinnedColumn) -> (Vec<u32>, Vec<u32>) {
    let n_bins = col.mapper.n_bins();
    let mut start = vec![0usize; n_bins + 2];
    for &b in &col.bins {
        start[b as usize + 1] += 1;
    }
    for b in 0..=n_bins {
        start[b + 1] += start[b];
    }
    let mut order = vec![0u32; start[n_bins]];
    let mut missing = Vec::with_capacity(start[n_bins + 1] - start[n_bins]);
    for (r, &b) in col.bins.iter().enumerate() {
        if b as usize == n_bins {
            missing.push(r as u32);
        } else {
            order[start[b as usize]] = r as u32;
            start[b as usize] += 1;
        }
    }
    (order, missing)
}

impl<'a> TreeBuilder<'a> {
    pub fn new(data: &'a Dataset, params: &TreeParams) -> Result<Self> {
        params.validate()?;
        let views = data
            .columns()
            .iter()
            .zip(data.schema())
            .map(|(c, meta)| {
                ColumnView::new(c, params.sparsity_aware).ok_or_else(|| {
                    Error::Schema(format!(
                        "categorical column '{}' must be encoded before training",
                        meta.name
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let max_bins = match params.split_method {
            SplitMethod::Histogram => params.max_bins,
            SplitMethod::Exact => usize::MAX,
        };
        let binned: Vec<BinnedColumn> = views
            .iter()
            .map(|v| BinnedColumn::new(v, data.n_rows(), max_bins))
            .collect();
        let (order, missing_rows) = binned.iter().map(sort_by_bin).unzip();
        Ok(Self {
            data,
            params: params.clone(),
            views,
            binned,
            order,
            missing_rows,
        })
    }

    pub fn params(&self) -> &TreeParams {
        &self.params
    }

    /// Fits one tree on `rows` using only `features`. `grads` is indexed by
    /// row id and must cover every row of the dataset.
    pub fn fit(
        &self,
        grads: &[GradientPair],
        rows: &[u32],
        features: &[usize],
        seed_value: u64,
    ) -> Result<FittedTree> {
        if grads.len() != self.data.n_rows() {
            return Err(Error::LengthMismatch {
                expected: self.data.n_rows(),
                actual: grads.len(),
            });
        }
        if rows.is_empty() {
            return Err(Error::Parameter("cannot fit a tree on zero rows".into()));
        }
        if let Some(&f) = features.iter().find(|&&f| f >= self.data.n_features()) {
            return Err(Error::Parameter(format!("feature {f} out of range")));
        }
        let mut rows = rows.to_vec();
        rows.sort_unstable();
        rows.dedup();
        let mut features = features.to_vec();
        features.sort_unstable();
        features.dedup();

        let eff = effective_grads(grads);
        let mut growth = Growing {
            builder: self,
            grads: &eff,
            features: &features,
            seed: seed_value,
            nodes: Vec::new(),
            scratch: Scratch::default(),
            slot: vec![NO_SLOT; self.data.n_rows()],
        };
        let leaves = match self.params.growth {
            Growth::DepthWise => growth.depth_wise(rows),
            Growth::LeafWise => growth.leaf_wise(rows),
            Growth::Oblivious => growth.oblivious(rows),
        };
        let mut nodes = growth.nodes;
        for (node, _) in &leaves {
            let stats = nodes[*node].stats;
            let weight = if stats.count == 0 {
                0.0
            } else {
                leaf_weight(stats.g, stats.h, self.params.lambda_l2, self.params.alpha_l1)
                    .unwrap_or(0.0)
            };
            nodes[*node].kind = NodeKind::Leaf { weight };
        }
        Ok(FittedTree {
            tree: RegressionTree::from_nodes(nodes, &self.params),
            leaf_rows: leaves,
        })
    }
}

/// Fits a single tree on `data` (bins computed from all of `data`).
pub fn fit_tree(
    data: &Dataset,
    grads: &[GradientPair],
    rows: &[u32],
    features: &[usize],
    params: &TreeParams,
    seed_value: u64,
) -> Result<RegressionTree> {
    Ok(TreeBuilder::new(data, params)?
        .fit(grads, rows, features, seed_value)?
        .tree)
}

/// Scan state of one node during a level pass over a feature.
struct LevelAcc {
    total: NodeStats,
    active: bool,
    missing: NodeStats,
    present: NodeStats,
    left: NodeStats,
    run: NodeStats,
    run_bin: u32,
    best_score: f64,
    pick: Option<Boundary>,
}

impl LevelAcc {
    fn new(total: NodeStats) -> Self {
        Self {
            total,
            active: false,
            missing: NodeStats::default(),
            present: NodeStats::default(),
            left: NodeStats::default(),
            run: NodeStats::default(),
            run_bin: 0,
            best_score: f64::NEG_INFINITY,
            pick: None,
        }
    }

    fn reset(&mut self, active: bool) {
        *self = Self {
            active,
            ..Self::new(self.total)
        };
    }

    /// Ends the current bin run and scores the boundary before `next_bin`.
    #[inline]
    fn close_run(&mut self, next_bin: u32, lambda_l2: f64) {
        if self.run.count > 0 {
            self.left = self.left.plus(self.run);
            if let Some((v, default_left)) = boundary_score(self.left, self.present, self.missing, lambda_l2) {
                if v > self.best_score {
                    self.best_score = v;
                    self.pick = Some(Boundary {
                        left_bin: self.run_bin,
                        right_bin: next_bin,
                        default_left,
                        left_present: self.left,
                    });
                }
            }
            self.run = NodeStats::default();
        }
        self.run_bin = next_bin;
    }
}

/// Scan state of one leaf while searching an oblivious level.
struct ObliviousAcc {
    total: NodeStats,
    eligible: bool,
    missing: NodeStats,
    present: NodeStats,
    left: NodeStats,
    term_ml: f64,
    term_mr: f64,
    touched: bool,
}

impl ObliviousAcc {
    fn new(total: NodeStats, eligible: bool) -> Self {
        Self {
            total,
            eligible,
            missing: NodeStats::default(),
            present: NodeStats::default(),
            left: NodeStats::default(),
            term_ml: 0.0,
            term_mr: 0.0,
            touched: false,
        }
    }

    fn reset(&mut self) {
        *self = Self::new(self.total, self.eligible);
    }

    /// Recomputes this leaf's gain for both missing directions.
    #[inline]
    fn refresh(&mut self, any_missing: bool, lambda_l2: f64) {
        let right = self.present.minus(self.left);
        let term = |l: NodeStats, r: NodeStats| {
            if admissible(&l, lambda_l2) && admissible(&r, lambda_l2) {
                split_gain(l.g, l.h, r.g, r.h, lambda_l2, 0.0)
            } else {
                0.0
            }
        };
        self.term_ml = term(self.left.plus(self.missing), right);
        self.term_mr = if any_missing {
            term(self.left, right.plus(self.missing))
        } else {
            self.term_ml
        };
    }
}

struct Growing<'b, 'a> {
    builder: &'b TreeBuilder<'a>,
    grads: &'b [(f64, f64)],
    features: &'b [usize],
    seed: u64,
    nodes: Vec<Node>,
    scratch: Scratch,
    /// Index of the frontier node each row belongs to during a level pass.
    slot: Vec<u32>,
}

impl Growing<'_, '_> {
    fn params(&self) -> &TreeParams {
        &self.builder.params
    }

    fn push_leaf(&mut self, depth: u32, stats: NodeStats) -> usize {
        self.nodes.push(Node {
            depth,
            stats,
            kind: NodeKind::Leaf { weight: 0.0 },
        });
        self.nodes.len() - 1
    }

    /// Feature subset for one node (or one oblivious level).
    fn sampled_features(&self, key: u64) -> Vec<usize> {
        let frac = self.params().colsample_bynode;
        if frac >= 1.0 || self.features.len() <= 1 {
            return self.features.to_vec();
        }
        let k = ((frac * self.features.len() as f64).round() as usize).clamp(1, self.features.len());
        // The k features with the smallest keyed hash form a uniform subset.
        let node_seed = seed::derive_seed(self.seed, &[seed::name_key("bynode"), key]);
        let mut keyed: Vec<(u64, usize)> = self
            .features
            .iter()
            .map(|&f| (seed::derive_seed(node_seed, &[f as u64]), f))
            .collect();
        keyed.select_nth_unstable(k - 1);
        let mut picked: Vec<usize> = keyed[..k].iter().map(|&(_, f)| f).collect();
        picked.sort_unstable();
        picked
    }

    fn thresholds(&self, feature: usize) -> Thresholds<'_> {
        let col = &self.builder.binned[feature];
        match self.params().split_method {
            SplitMethod::Exact => Thresholds::Midpoint(&col.levels),
            SplitMethod::Histogram => Thresholds::BinBound(col.mapper.bounds()),
        }
    }

    fn find_split(&mut self, node: usize, rows: &[u32]) -> Option<SplitCandidate> {
        if rows.len() < self.params().min_samples_split {
            return None;
        }
        let features = self.sampled_features(node as u64);
        let lambda = self.params().lambda_l2;
        let total = self.nodes[node].stats;
        let mut best: Option<SplitCandidate> = None;
        for f in features {
            let col = &self.builder.binned[f];
            let thresholds = match self.params().split_method {
                SplitMethod::Exact => Thresholds::Midpoint(&col.levels),
                SplitMethod::Histogram => Thresholds::BinBound(col.mapper.bounds()),
            };
            let cand = scan_node(f, col, thresholds, self.grads, rows, total, lambda, &mut self.scratch);
            if let Some(c) = cand {
                if c.beats(&best) {
                    best = Some(c);
                }
            }
        }
        best
    }

    /// Best split of every frontier node, found with one pass per feature
    /// over the rows pre-sorted by bin, or node by node once few rows are
    /// left. Gives the same result as calling `find_split` on each node.
    fn find_level_splits(&mut self, frontier: &[(usize, Vec<u32>)]) -> Vec<Option<SplitCandidate>> {
        let mut result = vec![None; frontier.len()];
        let min_split = self.params().min_samples_split;
        let active: Vec<usize> = (0..frontier.len())
            .filter(|&i| frontier[i].1.len() >= min_split)
            .collect();
        if active.is_empty() {
            return result;
        }
        let active_rows: usize = active.iter().map(|&i| frontier[i].1.len()).sum();
        if active_rows * 2 < self.builder.data.n_rows() {
            for &i in &active {
                result[i] = self.find_split(frontier[i].0, &frontier[i].1);
            }
            return result;
        }
        let n_features = self.builder.data.n_features();
        let k = active.len();
        let mut uses = vec![false; k * n_features];
        for (s, &i) in active.iter().enumerate() {
            for &r in &frontier[i].1 {
                self.slot[r as usize] = s as u32;
            }
            for f in self.sampled_features(frontier[i].0 as u64) {
                uses[s * n_features + f] = true;
            }
        }
        let lambda = self.params().lambda_l2;
        let grads = self.grads;
        let slot = &self.slot;
        let mut acc: Vec<LevelAcc> = active
            .iter()
            .map(|&i| LevelAcc::new(self.nodes[frontier[i].0].stats))
            .collect();
        let mut best: Vec<Option<SplitCandidate>> = vec![None; k];
        for f in 0..n_features {
            let mut any = false;
            for (s, a) in acc.iter_mut().enumerate() {
                a.reset(uses[s * n_features + f]);
                any |= a.active;
            }
            if !any || self.builder.binned[f].mapper.n_bins() < 2 {
                continue;
            }
            let bins = &self.builder.binned[f].bins;
            for &r in &self.builder.missing_rows[f] {
                let s = slot[r as usize];
                if s != NO_SLOT {
                    let (g, h) = grads[r as usize];
                    acc[s as usize].missing.add(g, h);
                }
            }
            for a in acc.iter_mut() {
                a.present = a.total.minus(a.missing);
            }
            for &r in &self.builder.order[f] {
                let s = slot[r as usize];
                if s == NO_SLOT {
                    continue;
                }
                let a = &mut acc[s as usize];
                if !a.active {
                    continue;
                }
                let b = bins[r as usize];
                if b != a.run_bin {
                    a.close_run(b, lambda);
                }
                let (g, h) = grads[r as usize];
                a.run.add(g, h);
            }
            let thresholds = self.thresholds(f);
            for (a, best) in acc.iter().zip(best.iter_mut()) {
                let cand = a.pick.and_then(|p| p.candidate(f, thresholds, a.present, a.missing, lambda));
                if let Some(c) = cand {
                    if c.beats(best) {
                        *best = Some(c);
                    }
                }
            }
        }
        for (s, &i) in active.iter().enumerate() {
            for &r in &frontier[i].1 {
                self.slot[r as usize] = NO_SLOT;
            }
            result[i] = best[s];
        }
        result
    }

    fn partition(&self, rows: &[u32], feature: usize, threshold: f64, default_left: bool) -> (Vec<u32>, Vec<u32>) {
        let view = &self.builder.views[feature];
        let goes_left = |r: u32| match view.value(r as usize) {
            Some(v) => v <= threshold,
            None => default_left,
        };
        let n_left = rows.iter().filter(|&&r| goes_left(r)).count();
        let mut left = Vec::with_capacity(n_left);
        let mut right = Vec::with_capacity(rows.len() - n_left);
        for &r in rows {
            if goes_left(r) {
                left.push(r);
            } else {
                right.push(r);
            }
        }
        (left, right)
    }

    /// Turns leaf `node` into a split and returns its two children.
    fn split_node(&mut self, node: usize, rows: &[u32], split: &SplitCandidate) -> [(usize, Vec<u32>); 2] {
        let (left_rows, right_rows) =
            self.partition(rows, split.feature, split.threshold, split.default_left);
        let depth = self.nodes[node].depth + 1;
        let left = self.push_leaf(depth, node_stats(&left_rows, self.grads));
        let right = self.push_leaf(depth, node_stats(&right_rows, self.grads));
        self.nodes[node].kind = NodeKind::Split {
            feature: split.feature as u32,
            threshold: split.threshold,
            default_left: split.default_left,
            left: left as u32,
            right: right as u32,
            gain: split.gain,
        };
        [(left, left_rows), (right, right_rows)]
    }

    fn depth_wise(&mut self, rows: Vec<u32>) -> Vec<(usize, Vec<u32>)> {
        let root = self.push_leaf(0, node_stats(&rows, self.grads));
        let mut frontier = vec![(root, rows)];
        let mut leaves = Vec::new();
        for _ in 0..self.params().max_depth {
            let mut next = Vec::new();
            let splits = self.find_level_splits(&frontier);
            for ((node, rows), split) in frontier.into_iter().zip(splits) {
                match split {
                    Some(split) => next.extend(self.split_node(node, &rows, &split)),
                    None => leaves.push((node, rows)),
                }
            }
            frontier = next;
            if frontier.is_empty() {
                break;
            }
        }
        leaves.extend(frontier);
        leaves.sort_by_key(|l| l.0);
        leaves
    }

    fn leaf_wise(&mut self, rows: Vec<u32>) -> Vec<(usize, Vec<u32>)> {
        let max_depth = self.params().max_depth as u32;
        let root = self.push_leaf(0, node_stats(&rows, self.grads));
        let root_split = self.find_split(root, &rows);
        let mut open: Vec<(usize, Vec<u32>, Option<SplitCandidate>)> = vec![(root, rows, root_split)];
        let mut n_leaves = 1;
        while n_leaves < self.params().num_leaves {
            // Largest gain first; equal gains go to the older node.
            let pick = open
                .iter()
                .enumerate()
                .filter_map(|(i, (node, _, s))| s.map(|s| (i, *node, s.gain)))
                .fold(None::<(usize, usize, f64)>, |best, c| match best {
                    Some(b) if c.2 < b.2 || (c.2 == b.2 && c.1 > b.1) => Some(b),
                    _ => Some(c),
                });
            let Some((i, _, _)) = pick else { break };
            let (node, rows, split) = open.swap_remove(i);
            let children = self.split_node(node, &rows, &split.expect("picked split"));
            for (child, child_rows) in children {
                let s = if self.nodes[child].depth < max_depth {
                    self.find_split(child, &child_rows)
                } else {
                    None
                };
                open.push((child, child_rows, s));
            }
            n_leaves += 1;
        }
        let mut leaves: Vec<(usize, Vec<u32>)> = open.into_iter().map(|(n, r, _)| (n, r)).collect();
        leaves.sort_by_key(|l| l.0);
        leaves
    }

    /// Raw gain of splitting one leaf by a shared condition; zero when the
    /// condition does not produce two admissible children.
    fn leaf_term(&self, total: NodeStats, left: NodeStats, right: NodeStats) -> f64 {
        let lambda = self.params().lambda_l2;
        if (total.count as usize) < self.params().min_samples_split
            || !admissible(&left, lambda)
            || !admissible(&right, lambda)
        {
            return 0.0;
        }
        split_gain(left.g, left.h, right.g, right.h, lambda, 0.0)
    }

    fn oblivious(&mut self, rows: Vec<u32>) -> Vec<(usize, Vec<u32>)> {
        let root = self.push_leaf(0, node_stats(&rows, self.grads));
        let mut leaves = vec![(root, rows)];
        for depth in 0..self.params().max_depth {
            let Some((feature, threshold, default_left)) = self.best_level_split(&leaves, depth) else {
                break;
            };
            let mut next = Vec::with_capacity(leaves.len() * 2);
            for (node, rows) in &leaves {
                let split = SplitCandidate {
                    feature,
                    threshold,
                    default_left,
                    gain: 0.0,
                    left: NodeStats::default(),
                    right: NodeStats::default(),
                };
                let children = self.split_node(*node, rows, &split);
                let gain = self.leaf_term(
                    self.nodes[*node].stats,
                    self.nodes[children[0].0].stats,
                    self.nodes[children[1].0].stats,
                );
                if let NodeKind::Split { gain: g, .. } = &mut self.nodes[*node].kind {
                    *g = gain;
                }
                next.extend(children);
            }
            leaves = next;
        }
        leaves
    }

    /// Shared condition maximizing the summed gain over all current leaves.
    fn best_level_split(&mut self, leaves: &[(usize, Vec<u32>)], depth: usize) -> Option<(usize, f64, bool)> {
        let features = self.sampled_features(u64::MAX - depth as u64);
        let min_split = self.params().min_samples_split;
        let lambda = self.params().lambda_l2;
        let mut acc: Vec<ObliviousAcc> = Vec::with_capacity(leaves.len());
        for (l, (node, rows)) in leaves.iter().enumerate() {
            let total = self.nodes[*node].stats;
            let eligible = (total.count as usize) >= min_split;
            if eligible {
                for &r in rows {
                    self.slot[r as usize] = l as u32;
                }
            }
            acc.push(ObliviousAcc::new(total, eligible));
        }
        let grads = self.grads;
        let slot = &self.slot;
        let mut touched: Vec<usize> = Vec::new();
        let mut best: Option<(f64, usize, f64, bool)> = None;
        for f in features {
            let col = &self.builder.binned[f];
            if col.mapper.n_bins() < 2 {
                continue;
            }
            for a in acc.iter_mut() {
                a.reset();
            }
            for &r in &self.builder.missing_rows[f] {
                let l = slot[r as usize];
                if l != NO_SLOT {
                    let (g, h) = grads[r as usize];
                    acc[l as usize].missing.add(g, h);
                }
            }
            let any_missing = acc.iter().any(|a| a.missing.count > 0);
            let mut sum_ml = 0.0;
            let mut sum_mr = 0.0;
            for a in acc.iter_mut().filter(|a| a.eligible) {
                a.present = a.total.minus(a.missing);
                a.refresh(any_missing, lambda);
                sum_ml += a.term_ml;
                sum_mr += a.term_mr;
            }
            let bounds = col.mapper.bounds();
            let mut current: Option<u32> = None;
            let mut close = |bin: u32, touched: &mut Vec<usize>, acc: &mut [ObliviousAcc]| {
                for &l in touched.iter() {
                    let a = &mut acc[l];
                    a.touched = false;
                    let (ml, mr) = (a.term_ml, a.term_mr);
                    a.refresh(any_missing, lambda);
                    sum_ml += a.term_ml - ml;
                    sum_mr += a.term_mr - mr;
                }
                touched.clear();
                let (gain, default_left) =
                    if any_missing && sum_mr > sum_ml { (sum_mr, false) } else { (sum_ml, true) };
                if gain > 1e-12 && best.map_or(true, |bst| gain > bst.0) {
                    best = Some((gain, f, bounds[bin as usize], default_left));
                }
            };
            for &r in &self.builder.order[f] {
                let l = slot[r as usize];
                if l == NO_SLOT {
                    continue;
                }
                let b = col.bins[r as usize];
                if let Some(c) = current {
                    if c != b {
                        close(c, &mut touched, &mut acc);
                    }
                }
                current = Some(b);
                let a = &mut acc[l as usize];
                let (g, h) = grads[r as usize];
                a.left.add(g, h);
                if !a.touched {
                    a.touched = true;
                    touched.push(l as usize);
                }
            }
            for a in acc.iter_mut() {
                a.touched = false;
            }
            touched.clear();
        }
        for (_, rows) in leaves {
            for &r in rows {
                self.slot[r as usize] = NO_SLOT;
            }
        }
        best.map(|(_, f, t, d)| (f, t, d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{ColumnKind, ColumnMeta, FeatureColumn, MISSING};

    fn grads_from(g: &[f64]) -> Vec<GradientPair> {
        g.iter().map(|&g| GradientPair::new(g, 1.0)).collect()
    }

    fn all_rows(n: usize) -> Vec<u32> {
        (0..n as u32).collect()
    }

    #[test]
    fn stump_matches_brute_force_threshold() {
        let x = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0]];
        let ds = Dataset::from_rows(&x, vec![1, 1, 0, 0], 2).unwrap();
        let grads = grads_from(&[1.0, 1.0, -1.0, -1.0]);
        let params = TreeParams {
            max_depth: 1,
            ..Default::default()
        };
        let tree = fit_tree(&ds, &grads, &all_rows(4), &[0], &params, 0).unwrap();
        assert_eq!(tree.n_leaves(), 2);
        match tree.nodes()[0].kind {
            NodeKind::Split { threshold, gain, .. } => {
                assert_eq!(threshold, 2.5);
                // G = +-2, H = 2 per side.
                assert_eq!(gain, 2.0);
            }
            _ => panic!("expected a split"),
        }
        assert_eq!(tree.predict(&[1.0]), -1.0);
        assert_eq!(tree.predict(&[4.0]), 1.0);
    }

    #[test]
    fn leaf_wise_two_leaves_equals_depth_one() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![(i * 7 % 11) as f64, (i % 5) as f64]).collect();
        let labels: Vec<u32> = (0..30).map(|i| (i % 2) as u32).collect();
        let ds = Dataset::from_rows(&x, labels, 2).unwrap();
        let grads: Vec<GradientPair> = (0..30)
            .map(|i| GradientPair::new(((i * 13 % 7) as f64) - 3.0, 1.0 + (i % 3) as f64))
            .collect();
        let dw = TreeParams {
            max_depth: 1,
            ..Default::default()
        };
        let lw = TreeParams {
            growth: Growth::LeafWise,
            num_leaves: 2,
            max_depth: 8,
            ..Default::default()
        };
        let a = fit_tree(&ds, &grads, &all_rows(30), &[0, 1], &dw, 0).unwrap();
        let b = fit_tree(&ds, &grads, &all_rows(30), &[0, 1], &lw, 0).unwrap();
        for r in 0..30 {
            assert_eq!(a.predict_in(&ds, r), b.predict_in(&ds, r));
        }
    }

    #[test]
    fn oblivious_levels_share_one_condition() {
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i % 8) as f64, ((i * 3) % 5) as f64, (i / 4) as f64])
            .collect();
        let labels: Vec<u32> = (0..40).map(|i| u32::from(i % 8 < 4)).collect();
        let ds = Dataset::from_rows(&x, labels.clone(), 2).unwrap();
        let grads: Vec<GradientPair> = labels
            .iter()
            .enumerate()
            .map(|(i, &l)| GradientPair::new(if l == 1 { -1.0 } else { 1.0 } + (i % 3) as f64 * 0.1, 1.0))
            .collect();
        let params = TreeParams {
            growth: Growth::Oblivious,
            max_depth: 2,
            ..Default::default()
        };
        let tree = fit_tree(&ds, &grads, &all_rows(40), &[0, 1, 2], &params, 0).unwrap();
        let levels = tree.splits_by_depth();
        assert!(levels.iter().all(|l| l.len() <= 1));
        let distinct: usize = levels.iter().map(Vec::len).sum();
        assert!(distinct <= 2);
        // Every leaf of a completed oblivious level sits at the same depth.
        let depth = tree.depth();
        assert!(tree.nodes().iter().filter(|n| n.is_leaf()).all(|n| n.depth as usize == depth));
    }

    #[test]
    fn min_samples_split_stops_growth() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64]).collect();
        let ds = Dataset::from_rows(&x, vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        let grads = grads_from(&[1.0, 1.0, 1.0, -1.0, -1.0, -1.0]);
        let params = TreeParams {
            max_depth: 4,
            min_samples_split: 7,
            ..Default::default()
        };
        let tree = fit_tree(&ds, &grads, &all_rows(6), &[0], &params, 0).unwrap();
        assert_eq!(tree.n_leaves(), 1);
    }

    #[test]
    fn categorical_columns_are_rejected() {
        let ds = Dataset::new(
            vec![FeatureColumn::Categorical(crate::data::CategoricalColumn::from_tokens(&["a", "b"]))],
            vec![ColumnMeta::new("c", ColumnKind::Categorical)],
            vec![0, 1],
            vec!["0".into(), "1".into()],
        )
        .unwrap();
        assert!(matches!(
            TreeBuilder::new(&ds, &TreeParams::default()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn sparsity_aware_routes_missing_by_learned_direction() {
        // Missing rows have the same gradient sign as the high values.
        let x = vec![vec![1.0], vec![2.0], vec![3.0], vec![4.0], vec![MISSING], vec![MISSING]];
        let ds = Dataset::from_rows(&x, vec![1, 1, 0, 0, 0, 0], 2).unwrap();
        let grads = grads_from(&[1.0, 1.0, -1.0, -1.0, -1.0, -1.0]);
        let params = TreeParams {
            max_depth: 1,
            sparsity_aware: true,
            ..Default::default()
        };
        let tree = fit_tree(&ds, &grads, &all_rows(6), &[0], &params, 0).unwrap();
        match tree.nodes()[0].kind {
            NodeKind::Split { threshold, default_left, .. } => {
                assert_eq!(threshold, 2.5);
                assert!(!default_left);
            }
            _ => panic!("expected a split"),
        }
        assert_eq!(tree.predict(&[MISSING]), tree.predict(&[4.0]));
    }

    #[test]
    fn level_pass_matches_per_node_search() {
        let n = 120;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                vec![
                    ((i * 37) % 23) as f64,
                    if i % 7 == 0 { MISSING } else { ((i * 11) % 9) as f64 },
                    (i % 4) as f64 * 0.5,
                ]
            })
            .collect();
        let labels: Vec<u32> = (0..n).map(|i| u32::from((i * 13) % 5 < 2)).collect();
        let ds = Dataset::from_rows(&x, labels, 2).unwrap();
        let grads: Vec<GradientPair> = (0..n)
            .map(|i| GradientPair::new(((i * 29) % 17) as f64 / 8.0 - 1.0, 0.25 + (i % 3) as f64 * 0.1))
            .collect();
        for (method, sparse) in [(SplitMethod::Exact, true), (SplitMethod::Histogram, false)] {
            let params = TreeParams {
                split_method: method,
                sparsity_aware: sparse,
                max_bins: 6,
                lambda_l2: 0.5,
                colsample_bynode: 0.67,
                ..Default::default()
            };
            let builder = TreeBuilder::new(&ds, &params).unwrap();
            let eff = effective_grads(&grads);
            let features = [0, 1, 2];
            let mut g = Growing {
                builder: &builder,
                grads: &eff,
                features: &features,
                seed: 5,
                nodes: Vec::new(),
                scratch: Scratch::default(),
                slot: vec![NO_SLOT; n],
            };
            let frontier: Vec<(usize, Vec<u32>)> = [0..40u32, 40..41, 41..n as u32]
                .into_iter()
                .map(|r| {
                    let rows: Vec<u32> = r.filter(|r| r % 5 != 3).collect();
                    let node = g.push_leaf(1, node_stats(&rows, &eff));
                    (node, rows)
                })
                .collect();
            let level = g.find_level_splits(&frontier);
            for ((node, rows), split) in frontier.iter().zip(level) {
                assert!(split.is_some() || rows.len() < 2);
                assert_eq!(g.find_split(*node, rows), split);
            }
        }
    }
}
