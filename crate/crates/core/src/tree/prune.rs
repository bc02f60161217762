use super::gain::leaf_weight;
use super::{Node, NodeKind, RegressionTree};

/// Collapses, until none is left, every split whose children are both
/// leaves and whose raw gain is below `gamma`. Collapsed nodes get a leaf
/// value recomputed from their merged statistics.
pub fn gamma_prune(tree: &RegressionTree, gamma: f64) -> RegressionTree {
    let mut nodes = tree.nodes().to_vec();
    loop {
        let mut changed = false;
        for i in 0..nodes.len() {
            if let NodeKind::Split { left, right, gain, .. } = nodes[i].kind {
                if gain < gamma && nodes[left as usize].is_leaf() && nodes[right as usize].is_leaf() {
                    let s = nodes[i].stats;
                    let weight = if s.count == 0 {
                        0.0
                    } else {
                        leaf_weight(s.g, s.h, tree.lambda_l2(), tree.alpha_l1()).unwrap_or(0.0)
                    };
                    nodes[i].kind = NodeKind::Leaf { weight };
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let nodes = compact(&nodes);
    RegressionTree::from_parts(nodes, tree.sparsity_aware(), tree.lambda_l2(), tree.alpha_l1())
        .expect("compaction keeps links valid")
}

/// Drops unreachable nodes, renumbering in breadth-first order from the root.
fn compact(nodes: &[Node]) -> Vec<Node> {
    let mut order = vec![0usize];
    let mut i = 0;
    while i < order.len() {
        if let NodeKind::Split { left, right, .. } = nodes[order[i]].kind {
            order.push(left as usize);
            order.push(right as usize);
        }
        i += 1;
    }
    let mut new_index = vec![u32::MAX; nodes.len()];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new as u32;
    }
    order
        .iter()
        .map(|&old| {
            let mut n = nodes[old].clone();
            if let NodeKind::Split { left, right, .. } = &mut n.kind {
                *left = new_index[*left as usize];
                *right = new_index[*right as usize];
            }
            n
        })
        .collect()
}
