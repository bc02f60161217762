//! Best-split search for a single feature over a set of rows.

use serde::{Deserialize, Serialize};

use super::binning::BinnedColumn;
use super::column::ColumnView;
use super::gain::{split_gain, GradientPair, NodeStats};
use super::TreeParams;
use crate::data::FeatureColumn;

/// A proposed split of one node.
///
/// `gain` is the raw second-order gain; the complexity penalty `gamma` is
/// applied afterwards by pruning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub default_left: bool,
    pub gain: f64,
    pub left: NodeStats,
    pub right: NodeStats,
}

impl SplitCandidate {
    /// True when `self` should replace `best` under the deterministic tie
    /// rule: higher gain wins, equal gain keeps the earlier candidate.
    #[inline]
    pub(crate) fn beats(&self, best: &Option<SplitCandidate>) -> bool {
        best.as_ref().map_or(true, |b| self.gain > b.gain)
    }
}

#[inline]
pub(crate) fn admissible(stats: &NodeStats, lambda_l2: f64) -> bool {
    stats.count > 0 && stats.h + lambda_l2 > 0.0
}

#[inline]
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

/// Reusable buffers for [`scan_node`].
#[derive(Debug, Default)]
pub(crate) struct Scratch {
    hist: Vec<NodeStats>,
    keys: Vec<u64>,
    runs: Vec<(u32, NodeStats)>,
}

/// How a boundary between two occupied bins becomes a threshold.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Thresholds<'a> {
    /// Midpoint of the two bins' values (one bin per distinct value).
    Midpoint(&'a [f64]),
    /// Upper boundary of the left bin.
    BinBound(&'a [f64]),
}

impl Thresholds<'_> {
    #[inline]
    pub(crate) fn between(&self, left_bin: u32, right_bin: u32) -> f64 {
        match *self {
            Thresholds::Midpoint(levels) => midpoint(levels[left_bin as usize], levels[right_bin as usize]),
            Thresholds::BinBound(bounds) => bounds[left_bin as usize],
        }
    }
}

/// Summed statistics of `rows`, in row order.
pub(crate) fn node_stats(rows: &[u32], grads: &[(f64, f64)]) -> NodeStats {
    let mut s = NodeStats::default();
    for &r in rows {
        let (g, h) = grads[r as usize];
        s.add(g, h);
    }
    s
}

/// Score of one boundary and the better direction for the missing rows.
///
/// Boundaries are ranked by the children's score sum; the parent term is
/// the same for all of them. Ties send missing rows left.
#[inline]
pub(crate) fn boundary_score(
    left: NodeStats,
    present: NodeStats,
    missing: NodeStats,
    lambda_l2: f64,
) -> Option<(f64, bool)> {
    let score = |g: f64, h: f64| g * g / (h + lambda_l2);
    let ok = |h: f64| h + lambda_l2 > 0.0;
    let (rg, rh) = (present.g - left.g, present.h - left.h);
    if missing.count == 0 {
        return (ok(left.h) && ok(rh)).then(|| (score(left.g, left.h) + score(rg, rh), true));
    }
    let to_left = (ok(left.h + missing.h) && ok(rh))
        .then(|| score(left.g + missing.g, left.h + missing.h) + score(rg, rh));
    let to_right = (ok(left.h) && ok(rh + missing.h))
        .then(|| score(left.g, left.h) + score(rg + missing.g, rh + missing.h));
    match (to_left, to_right) {
        (Some(l), Some(r)) if r > l => Some((r, false)),
        (Some(l), _) => Some((l, true)),
        (None, Some(r)) => Some((r, false)),
        (None, None) => None,
    }
}

/// The winning boundary of one feature scan.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Boundary {
    pub left_bin: u32,
    pub right_bin: u32,
    pub default_left: bool,
    pub left_present: NodeStats,
}

impl Boundary {
    pub(crate) fn candidate(
        &self,
        feature: usize,
        thresholds: Thresholds<'_>,
        present: NodeStats,
        missing: NodeStats,
        lambda_l2: f64,
    ) -> Option<SplitCandidate> {
        let right_present = present.minus(self.left_present);
        let (left, right) = if self.default_left {
            (self.left_present.plus(missing), right_present)
        } else {
            (self.left_present, right_present.plus(missing))
        };
        let gain = split_gain(left.g, left.h, right.g, right.h, lambda_l2, 0.0);
        (gain > 0.0).then(|| SplitCandidate {
            feature,
            threshold: thresholds.between(self.left_bin, self.right_bin),
            default_left: self.default_left,
            gain,
            left,
            right,
        })
    }
}

/// Best split of one feature over `rows` (ascending), whose summed
/// statistics are `total`.
///
/// Occupied bins are collected as runs in ascending bin order, either from
/// a full histogram or, for nodes much smaller than the bin count, by
/// sorting `(bin, row)` keys. Both visit rows in the same order, so the
/// per-bin sums are identical.
#[allow(clippy::too_many_arguments)]
pub(crate) fn scan_node(
    feature: usize,
    column: &BinnedColumn,
    thresholds: Thresholds<'_>,
    grads: &[(f64, f64)],
    rows: &[u32],
    total: NodeStats,
    lambda_l2: f64,
    scratch: &mut Scratch,
) -> Option<SplitCandidate> {
    let n_bins = column.mapper.n_bins();
    if n_bins < 2 {
        return None;
    }
    let missing_bin = column.mapper.missing_bin();
    let bins = &column.bins;
    let mut missing = NodeStats::default();
    let runs = &mut scratch.runs;
    runs.clear();
    if rows.len() * 4 >= n_bins {
        let hist = &mut scratch.hist;
        hist.clear();
        hist.resize(n_bins + 1, NodeStats::default());
        for &r in rows {
            let (g, h) = grads[r as usize];
            hist[bins[r as usize] as usize].add(g, h);
        }
        missing = hist[n_bins];
        runs.extend(
            hist[..n_bins]
                .iter()
                .enumerate()
                .filter(|(_, s)| s.count > 0)
                .map(|(b, s)| (b as u32, *s)),
        );
    } else {
        let keys = &mut scratch.keys;
        keys.clear();
        for &r in rows {
            let b = bins[r as usize];
            if b == missing_bin {
                let (g, h) = grads[r as usize];
                missing.add(g, h);
            } else {
                keys.push(u64::from(b) << 32 | u64::from(r));
            }
        }
        keys.sort_unstable();
        for &k in keys.iter() {
            let b = (k >> 32) as u32;
            let (g, h) = grads[(k & 0xffff_ffff) as usize];
            match runs.last_mut() {
                Some((last, stats)) if *last == b => stats.add(g, h),
                _ => {
                    let mut stats = NodeStats::default();
                    stats.add(g, h);
                    runs.push((b, stats));
                }
            }
        }
    }
    let present = total.minus(missing);
    let mut best: Option<Boundary> = None;
    let mut best_score = f64::NEG_INFINITY;
    let mut left = NodeStats::default();
    for w in runs.windows(2) {
        left = left.plus(w[0].1);
        if let Some((v, default_left)) = boundary_score(left, present, missing, lambda_l2) {
            if v > best_score {
                best_score = v;
                best = Some(Boundary {
                    left_bin: w[0].0,
                    right_bin: w[1].0,
                    default_left,
                    left_present: left,
                });
            }
        }
    }
    best?.candidate(feature, thresholds, present, missing, lambda_l2)
}

pub(crate) fn effective_grads(grads: &[GradientPair]) -> Vec<(f64, f64)> {
    grads.iter().map(|p| (p.g_eff(), p.h_eff())).collect()
}

/// Exact greedy split search for one feature.
///
/// Candidate thresholds are midpoints between consecutive distinct present
/// values. With `params.sparsity_aware`, missing and implicit sparse rows are
/// sent to whichever side gives the larger gain (ties left); otherwise they
/// read as `0.0`. Returns the best candidate with positive raw gain.
pub fn best_split_exact(
    column: &FeatureColumn,
    feature: usize,
    grads: &[GradientPair],
    rows: &[u32],
    params: &TreeParams,
) -> Option<SplitCandidate> {
    let view = ColumnView::new(column, params.sparsity_aware)?;
    let mut rows = rows.to_vec();
    rows.sort_unstable();
    rows.dedup();
    let n_rows = rows.last().map_or(0, |&r| r as usize + 1);
    let binned = BinnedColumn::new(&view, n_rows, usize::MAX);
    let grads = effective_grads(grads);
    scan_node(
        feature,
        &binned,
        Thresholds::Midpoint(&binned.levels),
        &grads,
        &rows,
        node_stats(&rows, &grads),
        params.lambda_l2,
        &mut Scratch::default(),
    )
}

/// Histogram split search for one pre-binned feature. Candidate thresholds
/// are bin boundaries; otherwise the contract matches [`best_split_exact`].
pub fn best_split_histogram(
    column: &BinnedColumn,
    feature: usize,
    grads: &[GradientPair],
    rows: &[u32],
    params: &TreeParams,
) -> Option<SplitCandidate> {
    let mut rows = rows.to_vec();
    rows.sort_unstable();
    rows.dedup();
    let grads = effective_grads(grads);
    scan_node(
        feature,
        column,
        Thresholds::BinBound(column.mapper.bounds()),
        &grads,
        &rows,
        node_stats(&rows, &grads),
        params.lambda_l2,
        &mut Scratch::default(),
    )
}

