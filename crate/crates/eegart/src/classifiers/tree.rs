//! CART decision trees: weighted-Gini classification trees (shared by the
//! forest and AdaBoost) and squared-error regression trees (used by gradient
//! boosting).

use rand::prelude::*;
use serde::{Deserialize, Serialize};

/// A binary tree stored as a flat node vector; index 0 is the root.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Node {
    Split { feature: usize, threshold: f64, left: usize, right: usize },
    /// Class distribution for classification, scalar value for regression
    /// (stored as a one-element vector).
    Leaf { values: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_values(&self, x: &[f64]) -> &[f64] {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { values } => return values,
                Node::Split { feature, threshold, left, right } => {
                    idx = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    /// Features examined per split; `None` means all.
    pub max_features: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams { max_depth: None, max_features: None, min_samples_leaf: 1 }
    }
}

fn gini(class_weights: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - class_weights.iter().map(|w| (w / total) * (w / total)).sum::<f64>()
}

struct SplitCandidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// Grow a weighted-Gini classification tree. Feature subsets per split are
/// drawn from `rng` when `max_features` is set; with all features the fit is
/// rng-independent.
pub fn fit_classification(
    x: &[Vec<f64>],
    y: &[usize],
    weights: &[f64],
    n_classes: usize,
    params: &TreeParams,
    rng: &mut impl Rng,
) -> Tree {
    let indices: Vec<usize> = (0..x.len()).filter(|&i| weights[i] > 0.0).collect();
    let mut tree = Tree { nodes: Vec::new() };
    grow_classification(&mut tree, x, y, weights, n_classes, &indices, 0, params, rng);
    tree
}

#[allow(clippy::too_many_arguments)]
fn grow_classification(
    tree: &mut Tree,
    x: &[Vec<f64>],
    y: &[usize],
    weights: &[f64],
    n_classes: usize,
    indices: &[usize],
    depth: usize,
    params: &TreeParams,
    rng: &mut impl Rng,
) -> usize {
    let mut class_weights = vec![0.0; n_classes];
    let mut total = 0.0;
    for &i in indices {
        class_weights[y[i]] += weights[i];
        total += weights[i];
    }
    let node_gini = gini(&class_weights, total);
    let make_leaf = |tree: &mut Tree| -> usize {
        let dist: Vec<f64> = if total > 0.0 {
            class_weights.iter().map(|w| w / total).collect()
        } else {
            vec![1.0 / n_classes as f64; n_classes]
        };
        tree.nodes.push(Node::Leaf { values: dist });
        tree.nodes.len() - 1
    };
    let depth_cap = params.max_depth.is_some_and(|d| depth >= d);
    if node_gini <= 0.0 || indices.len() < 2 * params.min_samples_leaf || depth_cap {
        return make_leaf(tree);
    }

    let dim = x[0].len();
    let features = select_features(dim, params.max_features, rng);
    let mut best: Option<SplitCandidate> = None;
    for &f in &features {
        let mut order: Vec<usize> = indices.to_vec();
        order.sort_by(|&a, &b| x[a][f].partial_cmp(&x[b][f]).unwrap().then(a.cmp(&b)));
        let mut left_cw = vec![0.0; n_classes];
        let mut left_total = 0.0;
        for w in 0..order.len() - 1 {
            let i = order[w];
            left_cw[y[i]] += weights[i];
            left_total += weights[i];
            let (a, b) = (x[i][f], x[order[w + 1]][f]);
            if a == b {
                continue;
            }
            if w + 1 < params.min_samples_leaf || order.len() - w - 1 < params.min_samples_leaf {
                continue;
            }
            let right_total = total - left_total;
            let right_cw: Vec<f64> =
                class_weights.iter().zip(&left_cw).map(|(c, l)| c - l).collect();
            let weighted = (left_total * gini(&left_cw, left_total)
                + right_total * gini(&right_cw, right_total))
                / total;
            let gain = node_gini - weighted;
            let threshold = 0.5 * (a + b);
            let better = match &best {
                None => gain > 1e-15,
                Some(b) => gain > b.gain + 1e-15,
            };
            if better {
                best = Some(SplitCandidate { feature: f, threshold, gain });
            }
        }
    }

    match best {
        None => make_leaf(tree),
        Some(split) => {
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
                indices.iter().partition(|&&i| x[i][split.feature] <= split.threshold);
            let node_pos = tree.nodes.len();
            tree.nodes.push(Node::Leaf { values: Vec::new() }); // placeholder
            let left =
                grow_classification(tree, x, y, weights, n_classes, &left_idx, depth + 1, params, rng);
            let right =
                grow_classification(tree, x, y, weights, n_classes, &right_idx, depth + 1, params, rng);
            tree.nodes[node_pos] =
                Node::Split { feature: split.feature, threshold: split.threshold, left, right };
            node_pos
        }
    }
}

fn select_features(dim: usize, max_features: Option<usize>, rng: &mut impl Rng) -> Vec<usize> {
    match max_features {
        None => (0..dim).collect(),
        Some(m) if m >= dim => (0..dim).collect(),
        Some(m) => {
            let mut all: Vec<usize> = (0..dim).collect();
            all.shuffle(rng);
            let mut chosen: Vec<usize> = all.into_iter().take(m).collect();
            chosen.sort_unstable();
            chosen
        }
    }
}

/// Grow a squared-error regression tree over `targets`. `leaf_value` maps
/// the sample indices of a leaf to its output, so boosting can apply its own
/// leaf update rule.
pub fn fit_regression(
    x: &[Vec<f64>],
    targets: &[f64],
    indices: &[usize],
    params: &TreeParams,
    leaf_value: &dyn Fn(&[usize]) -> f64,
) -> Tree {
    let mut tree = Tree { nodes: Vec::new() };
    grow_regression(&mut tree, x, targets, indices, 0, params, leaf_value);
    tree
}

fn grow_regression(
    tree: &mut Tree,
    x: &[Vec<f64>],
    targets: &[f64],
    indices: &[usize],
    depth: usize,
    params: &TreeParams,
    leaf_value: &dyn Fn(&[usize]) -> f64,
) -> usize {
    let n = indices.len() as f64;
    let sum: f64 = indices.iter().map(|&i| targets[i]).sum();
    let sq_sum: f64 = indices.iter().map(|&i| targets[i] * targets[i]).sum();
    let node_sse = sq_sum - sum * sum / n;
    let make_leaf = |tree: &mut Tree| -> usize {
        tree.nodes.push(Node::Leaf { values: vec![leaf_value(indices)] });
        tree.nodes.len() - 1
    };
    let depth_cap = params.max_depth.is_some_and(|d| depth >= d);
    if node_sse <= 1e-12 || indices.len() < 2 * params.min_samples_leaf || depth_cap {
        return make_leaf(tree);
    }

    let dim = x[0].len();
    let mut best: Option<SplitCandidate> = None;
    #[allow(clippy::needless_range_loop)] // f indexes a column, not a container
    for f in 0..dim {
        let mut order: Vec<usize> = indices.to_vec();
        order.sort_by(|&a, &b| x[a][f].partial_cmp(&x[b][f]).unwrap().then(a.cmp(&b)));
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        for w in 0..order.len() - 1 {
            let i = order[w];
            left_sum += targets[i];
            left_sq += targets[i] * targets[i];
            let (a, b) = (x[i][f], x[order[w + 1]][f]);
            if a == b {
                continue;
            }
            if w + 1 < params.min_samples_leaf || order.len() - w - 1 < params.min_samples_leaf {
                continue;
            }
            let ln = (w + 1) as f64;
            let rn = n - ln;
            let right_sum = sum - left_sum;
            let right_sq = sq_sum - left_sq;
            let sse = (left_sq - left_sum * left_sum / ln) + (right_sq - right_sum * right_sum / rn);
            let gain = node_sse - sse;
            let better = match &best {
                None => gain > 1e-15,
                Some(b) => gain > b.gain + 1e-15,
            };
            if better {
                best = Some(SplitCandidate { feature: f, threshold: 0.5 * (a + b), gain });
            }
        }
    }

    match best {
        None => make_leaf(tree),
        Some(split) => {
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
                indices.iter().partition(|&&i| x[i][split.feature] <= split.threshold);
            let node_pos = tree.nodes.len();
            tree.nodes.push(Node::Leaf { values: Vec::new() });
            let left = grow_regression(tree, x, targets, &left_idx, depth + 1, params, leaf_value);
            let right = grow_regression(tree, x, targets, &right_idx, depth + 1, params, leaf_value);
            tree.nodes[node_pos] =
                Node::Split { feature: split.feature, threshold: split.threshold, left, right };
            node_pos
        }
    }
}
