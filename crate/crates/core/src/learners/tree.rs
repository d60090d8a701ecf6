//! Regression tree grower shared by the single-tree and boosted learners.
//!
//! Split search is order-independent: candidate enumeration runs over
//! (value, target) pairs sorted by `f64::total_cmp`, all sums accumulate
//! in that canonical order, and ties between equally good splits resolve
//! to the lowest feature index, then the lowest threshold, then routing
//! missing values left. Permuting training rows therefore changes nothing,
//! bit for bit.
//!
//! Missing values never block a split: both routing directions are scored
//! and the better one is stored on the node (sparsity-aware split search).

use serde::{Deserialize, Serialize};

use crate::data::Matrix;
use crate::stats;

/// One node of a grown tree, in a flat arena indexed from the root at 0.
/// The arena form serializes without recursion regardless of depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "kebab-case")]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        /// Rows with `value <= threshold` go left. Thresholds are
        /// midpoints between adjacent observed values, so they are always
        /// finite.
        threshold: f64,
        /// Learned default direction for rows missing this feature.
        missing_left: bool,
        left: u32,
        right: u32,
    },
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowConfig {
    pub max_depth: Option<u32>,
    /// Minimum row count in each child (min_samples_leaf for the single
    /// tree, min_child_weight for boosting; unit hessians make weight a
    /// count).
    pub min_leaf: f64,
    /// Added to leaf denominators: leaf value = Σtargets / (count + l2).
    pub l2: f64,
    /// Multiplies every leaf value (the boosting learning rate).
    pub leaf_scale: f64,
}

pub(crate) struct GrownTree {
    pub nodes: Vec<TreeNode>,
    /// Total split gain attributed to each feature.
    pub gains: Vec<f64>,
}

struct BestSplit {
    gain: f64,
    feature: usize,
    threshold: f64,
    missing_left: bool,
}

/// Grow one tree on `targets` restricted to `rows` (global row indices).
pub(crate) fn grow(x: &Matrix, rows: &[usize], targets: &[f64], cfg: &GrowConfig) -> GrownTree {
    let mut nodes = Vec::new();
    let mut gains = vec![0.0; x.n_cols()];
    nodes.push(TreeNode::Leaf { value: 0.0 });
    // Explicit work stack; recursion depth is unbounded for deep trees.
    let mut work: Vec<(u32, Vec<usize>, u32)> = vec![(0, rows.to_vec(), 0)];
    while let Some((slot, node_rows, depth)) = work.pop() {
        let mut node_targets: Vec<f64> = node_rows.iter().map(|&r| targets[r]).collect();
        let n = node_rows.len() as f64;
        let sum = stats::stable_sum(&mut node_targets);
        let leaf = TreeNode::Leaf {
            value: sum / (n + cfg.l2) * cfg.leaf_scale,
        };

        let depth_ok = cfg.max_depth.map_or(true, |d| depth < d);
        let split = if depth_ok && n >= 2.0 * cfg.min_leaf {
            best_split(x, &node_rows, targets, sum, n, cfg)
        } else {
            None
        };
        match split {
            None => nodes[slot as usize] = leaf,
            Some(best) => {
                gains[best.feature] += best.gain;
                let (left_rows, right_rows) = partition(x, &node_rows, &best);
                let left = nodes.len() as u32;
                let right = left + 1;
                nodes.push(TreeNode::Leaf { value: 0.0 });
                nodes.push(TreeNode::Leaf { value: 0.0 });
                nodes[slot as usize] = TreeNode::Split {
                    feature: best.feature,
                    threshold: best.threshold,
                    missing_left: best.missing_left,
                    left,
                    right,
                };
                work.push((left, left_rows, depth + 1));
                work.push((right, right_rows, depth + 1));
            }
        }
    }
    GrownTree { nodes, gains }
}

/// Score = GL²/(nL+λ) + GR²/(nR+λ) − G²/(n+λ); accepted only when
/// strictly positive. Candidates are scanned feature-ascending and
/// threshold-ascending with missing-left tried first, and a candidate must
/// strictly beat the incumbent, which realizes the documented tie-break.
fn best_split(
    x: &Matrix,
    rows: &[usize],
    targets: &[f64],
    total_sum: f64,
    total_n: f64,
    cfg: &GrowConfig,
) -> Option<BestSplit> {
    let parent_score = total_sum * total_sum / (total_n + cfg.l2);
    let mut best: Option<BestSplit> = None;
    for feature in 0..x.n_cols() {
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
        let mut missing: Vec<f64> = Vec::new();
        for &r in rows {
            let v = x.get(r, feature);
            if v.is_nan() {
                missing.push(targets[r]);
            } else {
                pairs.push((v, targets[r]));
            }
        }
        if pairs.is_empty() {
            continue; // no observed values to order on
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let n_miss = missing.len() as f64;
        let sum_miss = stats::stable_sum(&mut missing);
        let sum_present: f64 = {
            let mut acc = 0.0;
            for &(_, t) in &pairs {
                acc += t;
            }
            acc
        };
        let n_present = pairs.len() as f64;

        let mut consider = |gain: f64, threshold: f64, missing_left: bool| {
            if gain > 0.0 && best.as_ref().map_or(true, |b| gain > b.gain) {
                best = Some(BestSplit {
                    gain,
                    feature,
                    threshold,
                    missing_left,
                });
            }
        };

        let mut cum = 0.0;
        for i in 0..pairs.len() - 1 {
            cum += pairs[i].1;
            if pairs[i].0 == pairs[i + 1].0 {
                continue;
            }
            let threshold = pairs[i].0 / 2.0 + pairs[i + 1].0 / 2.0;
            let (nl_p, gl_p) = ((i + 1) as f64, cum);
            let (nr_p, gr_p) = (n_present - nl_p, sum_present - cum);
            for missing_left in [true, false] {
                let (nl, gl, nr, gr) = if missing_left {
                    (nl_p + n_miss, gl_p + sum_miss, nr_p, gr_p)
                } else {
                    (nl_p, gl_p, nr_p + n_miss, gr_p + sum_miss)
                };
                if nl < cfg.min_leaf || nr < cfg.min_leaf {
                    continue;
                }
                let gain =
                    gl * gl / (nl + cfg.l2) + gr * gr / (nr + cfg.l2) - parent_score;
                consider(gain, threshold, missing_left);
                if n_miss == 0.0 {
                    break; // both routings coincide
                }
            }
        }
        // One extra candidate when missing rows exist: every observed value
        // left, missing right, with the threshold at the maximum observed
        // value. (The mirror image, missing rows alone on the left, has no
        // finite threshold under the `value <= threshold` rule.)
        if n_miss >= cfg.min_leaf && n_present >= cfg.min_leaf {
            let threshold = pairs[pairs.len() - 1].0;
            let gain = sum_present * sum_present / (n_present + cfg.l2)
                + sum_miss * sum_miss / (n_miss + cfg.l2)
                - parent_score;
            consider(gain, threshold, false);
        }
    }
    best
}

fn partition(x: &Matrix, rows: &[usize], best: &BestSplit) -> (Vec<usize>, Vec<usize>) {
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &r in rows {
        let v = x.get(r, best.feature);
        let goes_left = if v.is_nan() {
            best.missing_left
        } else {
            v <= best.threshold
        };
        if goes_left {
            left.push(r);
        } else {
            right.push(r);
        }
    }
    (left, right)
}

/// Route one feature row through a grown tree.
pub(crate) fn predict_row(nodes: &[TreeNode], row: &[f64]) -> f64 {
    let mut at = 0usize;
    loop {
        match &nodes[at] {
            TreeNode::Leaf { value } => return *value,
            TreeNode::Split {
                feature,
                threshold,
                missing_left,
                left,
                right,
            } => {
                let v = row[*feature];
                let goes_left = if v.is_nan() { *missing_left } else { v <= *threshold };
                at = if goes_left { *left as usize } else { *right as usize };
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(max_depth: Option<u32>) -> GrowConfig {
        GrowConfig {
            max_depth,
            min_leaf: 1.0,
            l2: 0.0,
            leaf_scale: 1.0,
        }
    }

    #[test]
    fn single_split_recovers_step_function() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        let y = [0.0, 0.0, 10.0, 10.0];
        let rows: Vec<usize> = (0..4).collect();
        let tree = grow(&x, &rows, &y, &cfg(Some(1)));
        assert_eq!(predict_row(&tree.nodes, &[0.5]), 0.0);
        assert_eq!(predict_row(&tree.nodes, &[2.5]), 10.0);
        match &tree.nodes[0] {
            TreeNode::Split { threshold, .. } => assert_eq!(*threshold, 1.5),
            other => panic!("expected root split, got {other:?}"),
        }
    }

    #[test]
    fn unbounded_tree_interpolates_unique_rows() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0], vec![3.0]]);
        let y = [4.0, -2.0, 7.5, 0.25];
        let rows: Vec<usize> = (0..4).collect();
        let tree = grow(&x, &rows, &y, &cfg(None));
        for (i, target) in y.iter().enumerate() {
            assert_eq!(predict_row(&tree.nodes, x.row(i)), *target);
        }
    }

    #[test]
    fn missing_rows_follow_the_learned_direction() {
        // Missing rows share the high target, so they must route right.
        let x = Matrix::from_rows(&[
            vec![0.0],
            vec![1.0],
            vec![f64::NAN],
            vec![10.0],
            vec![11.0],
        ]);
        let y = [0.0, 0.0, 5.0, 5.0, 5.0];
        let rows: Vec<usize> = (0..5).collect();
        let tree = grow(&x, &rows, &y, &cfg(Some(1)));
        assert_eq!(predict_row(&tree.nodes, &[f64::NAN]), 5.0);
    }

    #[test]
    fn constant_targets_grow_a_lone_leaf() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]);
        let y = [5.0, 5.0, 5.0];
        let rows: Vec<usize> = (0..3).collect();
        let tree = grow(&x, &rows, &y, &cfg(None));
        assert_eq!(tree.nodes.len(), 1);
        assert_eq!(predict_row(&tree.nodes, &[9.0]), 5.0);
        assert!(tree.gains.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn row_permutation_leaves_the_tree_unchanged() {
        let x = Matrix::from_rows(&[
            vec![3.0, 1.0],
            vec![1.0, 4.0],
            vec![4.0, 1.0],
            vec![1.0, 5.0],
            vec![5.0, 9.0],
            vec![9.0, 2.0],
        ]);
        let y = [0.1, 2.3, 0.7, 2.9, 4.0, 0.2];
        let forward: Vec<usize> = (0..6).collect();
        let shuffled = vec![4, 0, 5, 2, 1, 3];
        let a = grow(&x, &forward, &y, &cfg(None));
        let b = grow(&x, &shuffled, &y, &cfg(None));
        assert_eq!(a.nodes, b.nodes);
        assert_eq!(a.gains, b.gains);
    }
}
