//! Random forest of Gini CART trees with bootstrap sampling and per-split
//! feature subsampling. Per-tree seeds derive from `seed ^ tree_index`, so a
//! parallel build would stay deterministic.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{self, Tree, TreeParams};
use super::{param_str, param_usize, Params, TrainSet};
use crate::{Error, Result};

pub const DEFAULT_TREES: usize = 100;

/// How many features each split examines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubset {
    Sqrt,
    Half,
    All,
}

impl FeatureSubset {
    fn count(self, dim: usize) -> Option<usize> {
        match self {
            FeatureSubset::Sqrt => Some(((dim as f64).sqrt().round() as usize).max(1)),
            FeatureSubset::Half => Some((dim / 2).max(1)),
            FeatureSubset::All => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

pub fn fit(train: &TrainSet, params: &Params, seed: u64) -> Result<ForestModel> {
    let n_trees = param_usize(params, "trees", DEFAULT_TREES)?;
    if n_trees == 0 {
        return Err(Error::Classifier("forest needs at least one tree".into()));
    }
    let max_depth = match param_usize(params, "max_depth", 0)? {
        0 => None,
        d => Some(d),
    };
    let subset = match param_str(params, "max_features", "sqrt") {
        "sqrt" => FeatureSubset::Sqrt,
        "half" => FeatureSubset::Half,
        "all" => FeatureSubset::All,
        other => return Err(Error::Classifier(format!("unknown max_features {other:?}"))),
    };
    let bootstrap = param_usize(params, "bootstrap", 1)? != 0;

    let n = train.x.len();
    let tree_params = TreeParams {
        max_depth,
        max_features: subset.count(train.dim()),
        min_samples_leaf: 1,
    };
    let trees = (0..n_trees)
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ t as u64);
            let weights: Vec<f64> = if bootstrap {
                let mut counts = vec![0.0; n];
                for _ in 0..n {
                    counts[rng.gen_range(0..n)] += 1.0;
                }
                counts
            } else {
                vec![1.0; n]
            };
            tree::fit_classification(
                &train.x,
                &train.y,
                &weights,
                train.n_classes,
                &tree_params,
                &mut rng,
            )
        })
        .collect();
    Ok(ForestModel { trees })
}

impl ForestModel {
    pub fn predict_scores(&self, x: &[f64], n_classes: usize) -> Vec<f64> {
        let mut scores = vec![0.0; n_classes];
        for t in &self.trees {
            for (s, v) in scores.iter_mut().zip(t.leaf_values(x)) {
                *s += v;
            }
        }
        scores.iter_mut().for_each(|s| *s /= self.trees.len() as f64);
        scores
    }
}
