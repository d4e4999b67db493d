//! Gradient-boosted trees for multiclass softmax: one regression tree per
//! class per round on the softmax pseudo-residuals, with shrinkage and row
//! subsampling. This is the xgboost substitute; the exact second-order
//! regularized objective of that system is out of scope.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{self, Tree, TreeParams};
use super::{param_f64, param_usize, softmax, Params, TrainSet};
use crate::{Error, Result};

pub const DEFAULT_ROUNDS: usize = 100;
pub const DEFAULT_SHRINKAGE: f64 = 0.1;
pub const DEFAULT_DEPTH: usize = 3;
pub const DEFAULT_SUBSAMPLE: f64 = 1.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradientBoostModel {
    /// Log class priors, the round-zero score.
    pub init: Vec<f64>,
    pub shrinkage: f64,
    /// rounds x n_classes trees.
    pub rounds: Vec<Vec<Tree>>,
}

pub fn fit(train: &TrainSet, params: &Params, seed: u64) -> Result<GradientBoostModel> {
    let n_rounds = param_usize(params, "rounds", DEFAULT_ROUNDS)?;
    let shrinkage = param_f64(params, "shrinkage", DEFAULT_SHRINKAGE)?;
    let depth = param_usize(params, "depth", DEFAULT_DEPTH)?;
    let subsample = param_f64(params, "subsample", DEFAULT_SUBSAMPLE)?;
    if n_rounds == 0 {
        return Err(Error::Classifier("gradient boosting needs at least one round".into()));
    }
    if !(0.0..=1.0).contains(&subsample) || subsample == 0.0 {
        return Err(Error::Classifier(format!("subsample {subsample} outside (0, 1]")));
    }
    let n = train.x.len();
    let k = train.n_classes;
    let kf = k as f64;

    let mut counts = vec![0usize; k];
    for &y in &train.y {
        counts[y] += 1;
    }
    let init: Vec<f64> = counts
        .iter()
        .map(|&c| ((c.max(1)) as f64 / n as f64).ln())
        .collect();

    let tree_params = TreeParams { max_depth: Some(depth), max_features: None, min_samples_leaf: 1 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scores: Vec<Vec<f64>> = vec![init.clone(); n];
    let mut rounds = Vec::with_capacity(n_rounds);
    for _ in 0..n_rounds {
        let probs: Vec<Vec<f64>> = scores.iter().map(|s| softmax(s)).collect();
        let mut sample: Vec<usize> = (0..n).collect();
        if subsample < 1.0 {
            sample.shuffle(&mut rng);
            sample.truncate(((n as f64 * subsample).round() as usize).max(1));
            sample.sort_unstable();
        }
        let mut round_trees = Vec::with_capacity(k);
        for class in 0..k {
            let residuals: Vec<f64> = (0..n)
                .map(|i| {
                    let target = if train.y[i] == class { 1.0 } else { 0.0 };
                    target - probs[i][class]
                })
                .collect();
            // Friedman's multiclass leaf update on the raw residuals
            let leaf_value = |ids: &[usize]| -> f64 {
                let num: f64 = ids.iter().map(|&i| residuals[i]).sum();
                let den: f64 = ids
                    .iter()
                    .map(|&i| residuals[i].abs() * (1.0 - residuals[i].abs()))
                    .sum();
                if den.abs() < 1e-10 {
                    0.0
                } else {
                    (kf - 1.0) / kf * num / den
                }
            };
            let t = tree::fit_regression(&train.x, &residuals, &sample, &tree_params, &leaf_value);
            for (i, s) in scores.iter_mut().enumerate() {
                s[class] += shrinkage * t.leaf_values(&train.x[i])[0];
            }
            round_trees.push(t);
        }
        rounds.push(round_trees);
    }
    Ok(GradientBoostModel { init, shrinkage, rounds })
}

impl GradientBoostModel {
    pub fn predict_scores(&self, x: &[f64], n_classes: usize) -> Vec<f64> {
        let mut logits = self.init.clone();
        logits.resize(n_classes, f64::NEG_INFINITY);
        for round in &self.rounds {
            for (class, t) in round.iter().enumerate() {
                logits[class] += self.shrinkage * t.leaf_values(x)[0];
            }
        }
        softmax(&logits)
    }
}
