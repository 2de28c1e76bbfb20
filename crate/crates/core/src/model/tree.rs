//! Binary classification tree grown by best Gini split.
//!
//! Training is fully deterministic: candidate splits are scanned in feature
//! order with ascending thresholds and only a strictly better Gini gain
//! replaces the incumbent, so ties resolve to the lowest feature index and
//! then the lowest threshold.

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 10,
            min_leaf: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", tag = "node", rename_all = "snake_case")]
pub enum TreeNode<T: Scalar> {
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
    Leaf {
        positives: u64,
        total: u64,
    },
}

/// CART-style tree over dense feature rows. Children precede their parent in
/// `nodes`; the root is the final entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DecisionTree<T: Scalar> {
    nodes: Vec<TreeNode<T>>,
}

impl<T: Scalar> DecisionTree<T> {
    /// Grow a tree on `rows` (one `Vec<T>` per example) with boolean labels.
    pub fn fit(rows: &[Vec<T>], labels: &[bool], params: &TreeParams) -> Self {
        assert_eq!(rows.len(), labels.len());
        assert!(!rows.is_empty(), "cannot fit a tree on zero rows");
        let mut nodes = Vec::new();
        let indices: Vec<usize> = (0..rows.len()).collect();
        build_node(rows, labels, indices, 0, params, &mut nodes);
        DecisionTree { nodes }
    }

    fn root(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Laplace-smoothed positive fraction of the reached leaf:
    /// `(positives + 1) / (total + 2)`.
    pub fn predict_proba(&self, row: &[T]) -> T {
        let mut at = self.root();
        loop {
            match &self.nodes[at] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
                TreeNode::Leaf { positives, total } => {
                    return (T::from_u64(*positives).expect("counts fit scalar") + T::one())
                        / (T::from_u64(*total).expect("counts fit scalar")
                            + T::from_f64_lossy(2.0));
                }
            }
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk<T: Scalar>(nodes: &[TreeNode<T>], at: usize) -> usize {
            match &nodes[at] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, self.root())
    }
}

/// Returns the index of the created node.
fn build_node<T: Scalar>(
    rows: &[Vec<T>],
    labels: &[bool],
    indices: Vec<usize>,
    depth: usize,
    params: &TreeParams,
    nodes: &mut Vec<TreeNode<T>>,
) -> usize {
    let total = indices.len();
    let positives = indices.iter().filter(|&&i| labels[i]).count();

    let make_leaf = |nodes: &mut Vec<TreeNode<T>>| {
        nodes.push(TreeNode::Leaf {
            positives: positives as u64,
            total: total as u64,
        });
        nodes.len() - 1
    };

    if positives == 0 || positives == total || depth >= params.max_depth {
        return make_leaf(nodes);
    }
    let Some((feature, threshold)) = best_split(rows, labels, &indices, params.min_leaf) else {
        return make_leaf(nodes);
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .into_iter()
        .partition(|&i| rows[i][feature] <= threshold);
    let left = build_node(rows, labels, left_idx, depth + 1, params, nodes);
    let right = build_node(rows, labels, right_idx, depth + 1, params, nodes);
    nodes.push(TreeNode::Split {
        feature,
        threshold,
        left,
        right,
    });
    nodes.len() - 1
}

fn gini(positives: f64, total: f64) -> f64 {
    if total == 0.0 {
        return 0.0;
    }
    let p = positives / total;
    2.0 * p * (1.0 - p)
}

/// Best (feature, threshold) by Gini gain, or `None` when no split satisfies
/// `min_leaf` or improves impurity.
#[allow(clippy::needless_range_loop)]
fn best_split<T: Scalar>(
    rows: &[Vec<T>],
    labels: &[bool],
    indices: &[usize],
    min_leaf: usize,
) -> Option<(usize, T)> {
    let n = indices.len();
    let n_features = rows[indices[0]].len();
    let total_pos = indices.iter().filter(|&&i| labels[i]).count() as f64;
    let parent = gini(total_pos, n as f64);

    let mut best: Option<(f64, usize, T)> = None;
    let mut column: Vec<(T, bool)> = Vec::with_capacity(n);
    for feature in 0..n_features {
        column.clear();
        column.extend(indices.iter().map(|&i| (rows[i][feature], labels[i])));
        column.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));

        let mut left_pos = 0f64;
        for split_at in 1..n {
            if column[split_at - 1].1 {
                left_pos += 1.0;
            }
            let (lo, hi) = (column[split_at - 1].0, column[split_at].0);
            if lo == hi {
                continue;
            }
            if split_at < min_leaf || n - split_at < min_leaf {
                continue;
            }
            let left_n = split_at as f64;
            let right_n = (n - split_at) as f64;
            let gain = parent
                - (left_n / n as f64) * gini(left_pos, left_n)
                - (right_n / n as f64) * gini(total_pos - left_pos, right_n);
            if gain <= 0.0 {
                continue;
            }
            if best.map(|(g, _, _)| gain > g).unwrap_or(true) {
                let two = T::from_f64_lossy(2.0);
                let mut threshold = lo + (hi - lo) / two;
                // midpoint can round up to `hi`; fall back to the left value so
                // `x <= threshold` still partitions exactly at this cut
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some((gain, feature, threshold));
            }
        }
    }
    best.map(|(_, feature, threshold)| (feature, threshold))
}
