use serde::{Deserialize, Serialize};

/// Regression-tree node. Serializes as `{feature, threshold, left, right}` or
/// `{leaf_value}`; rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        leaf_value: f64,
    },
}

impl TreeNode {
    pub fn predict(&self, x: &[f64; 3]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { leaf_value } => return *leaf_value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaves() + right.leaves(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RegressionTree {
    pub root: TreeNode,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64; 3]) -> f64 {
        self.root.predict(x)
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }
}

/// CART growth parameters.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TreeGrowth {
    pub max_depth: usize,
    pub min_leaf: usize,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
    /// Number of rows on the left within the rows sorted by `feature`.
    left_len: usize,
}

/// Grows a variance-reduction tree over the rows listed in `rows` (indices
/// into `x`/`y`, repeats allowed). All three features are tried at every
/// node; equal gains keep the lowest feature index, then the lowest threshold.
pub(crate) fn grow(x: &[[f64; 3]], y: &[f64], rows: &[usize], growth: TreeGrowth) -> RegressionTree {
    let mut rows = rows.to_vec();
    RegressionTree {
        root: grow_node(x, y, &mut rows, 0, growth),
    }
}

fn grow_node(x: &[[f64; 3]], y: &[f64], rows: &mut [usize], depth: usize, g: TreeGrowth) -> TreeNode {
    let n = rows.len();
    let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / n as f64;
    let sse: f64 = rows.iter().map(|&r| (y[r] - mean).powi(2)).sum();
    if depth >= g.max_depth || n < 2 * g.min_leaf.max(1) || sse <= 0.0 {
        return TreeNode::Leaf { leaf_value: mean };
    }

    let mut best: Option<BestSplit> = None;
    let mut sorted = rows.to_vec();
    let min_leaf = g.min_leaf.max(1);
    #[allow(clippy::needless_range_loop)]
    for feature in 0..3 {
        sorted.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]).then(a.cmp(&b)));
        let total: f64 = sorted.iter().map(|&r| y[r] - mean).sum();
        let base = total * total / n as f64;
        let mut left_sum = 0.0;
        for pos in 1..n {
            left_sum += y[sorted[pos - 1]] - mean;
            if pos < min_leaf || n - pos < min_leaf {
                continue;
            }
            let lo = x[sorted[pos - 1]][feature];
            let hi = x[sorted[pos]][feature];
            if !(lo < hi) {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / pos as f64
                + right_sum * right_sum / (n - pos) as f64
                - base;
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                best = Some(BestSplit {
                    feature,
                    threshold,
                    gain,
                    left_len: pos,
                });
            }
        }
    }

    let Some(split) = best.filter(|b| b.gain > sse * 1e-12) else {
        return TreeNode::Leaf { leaf_value: mean };
    };
    rows.sort_by(|&a, &b| {
        x[a][split.feature]
            .total_cmp(&x[b][split.feature])
            .then(a.cmp(&b))
    });
    let (left, right) = rows.split_at_mut(split.left_len);
    TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow_node(x, y, left, depth + 1, g)),
        right: Box::new(grow_node(x, y, right, depth + 1, g)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_data() -> (Vec<[f64; 3]>, Vec<f64>) {
        let x: Vec<[f64; 3]> = (0..20).map(|i| [i as f64, (i % 3) as f64, 0.0]).collect();
        let y = x.iter().map(|r| if r[0] < 10.0 { -90.0 } else { -70.0 }).collect();
        (x, y)
    }

    #[test]
    fn single_split_separates_step() {
        let (x, y) = step_data();
        let rows: Vec<usize> = (0..x.len()).collect();
        let t = grow(&x, &y, &rows, TreeGrowth { max_depth: 3, min_leaf: 2 });
        match &t.root {
            TreeNode::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 9.5);
            }
            _ => panic!("expected split"),
        }
        assert_eq!(t.depth(), 1);
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(t.predict(xi), *yi);
        }
    }

    #[test]
    fn depth_zero_is_mean_leaf() {
        let (x, y) = step_data();
        let rows: Vec<usize> = (0..x.len()).collect();
        let t = grow(&x, &y, &rows, TreeGrowth { max_depth: 0, min_leaf: 2 });
        assert_eq!(t.root, TreeNode::Leaf { leaf_value: -80.0 });
    }

    #[test]
    fn respects_depth_and_min_leaf() {
        let x: Vec<[f64; 3]> = (0..64).map(|i| [i as f64, (i * 7 % 11) as f64, (i % 5) as f64]).collect();
        let y: Vec<f64> = x.iter().map(|r| (r[0] * 0.3).sin() * 10.0 + r[1]).collect();
        let rows: Vec<usize> = (0..x.len()).collect();
        for depth in 0..6 {
            let t = grow(&x, &y, &rows, TreeGrowth { max_depth: depth, min_leaf: 2 });
            assert!(t.depth() <= depth);
            assert!(t.root.leaves() <= 32);
        }
    }

    #[test]
    fn tie_prefers_lowest_feature() {
        // Features 0 and 1 carry the same ordering; feature 0 must win.
        let x: Vec<[f64; 3]> = (0..8).map(|i| [i as f64, i as f64, 0.0]).collect();
        let y: Vec<f64> = (0..8).map(|i| if i < 4 { 0.0 } else { 1.0 }).collect();
        let rows: Vec<usize> = (0..8).collect();
        let t = grow(&x, &y, &rows, TreeGrowth { max_depth: 1, min_leaf: 2 });
        assert!(matches!(t.root, TreeNode::Split { feature: 0, .. }));
    }

    #[test]
    fn json_shape() {
        let t = TreeNode::Split {
            feature: 1,
            threshold: 2.5,
            left: Box::new(TreeNode::Leaf { leaf_value: -1.0 }),
            right: Box::new(TreeNode::Leaf { leaf_value: 1.0 }),
        };
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(
            s,
            r#"{"feature":1,"threshold":2.5,"left":{"leaf_value":-1.0},"right":{"leaf_value":1.0}}"#
        );
        let back: TreeNode = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
    }
}
