//! Multi-class AdaBoost (SAMME) over shallow Gini CART trees. Stages whose
//! weighted error reaches `1 - 1/K` are rejected and boosting stops.

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::tree::{self, Tree, TreeParams};
use super::{argmax, param_f64, param_usize, Params, TrainSet};
use crate::{Error, Result};

pub const DEFAULT_STAGES: usize = 100;
pub const DEFAULT_LEARNING_RATE: f64 = 1.0;
pub const WEAK_LEARNER_DEPTH: usize = 3;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub stages: Vec<Stage>,
    /// Weighted training error of each accepted stage, in order.
    pub stage_errors: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Stage {
    pub tree: Tree,
    pub alpha: f64,
}

pub fn fit(train: &TrainSet, params: &Params, seed: u64) -> Result<AdaBoostModel> {
    let n_stages = param_usize(params, "stages", DEFAULT_STAGES)?;
    let learning_rate = param_f64(params, "learning_rate", DEFAULT_LEARNING_RATE)?;
    if n_stages == 0 {
        return Err(Error::Classifier("adaboost needs at least one stage".into()));
    }
    let n = train.x.len();
    let k = train.n_classes as f64;
    let chance = 1.0 - 1.0 / k;
    let tree_params = TreeParams {
        max_depth: Some(WEAK_LEARNER_DEPTH),
        max_features: None,
        min_samples_leaf: 1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = vec![1.0 / n as f64; n];
    let mut stages = Vec::new();
    let mut stage_errors = Vec::new();
    for _ in 0..n_stages {
        let weak = tree::fit_classification(
            &train.x,
            &train.y,
            &weights,
            train.n_classes,
            &tree_params,
            &mut rng,
        );
        let predictions: Vec<usize> =
            train.x.iter().map(|x| argmax(weak.leaf_values(x))).collect();
        let err: f64 = predictions
            .iter()
            .zip(&train.y)
            .zip(&weights)
            .filter(|((p, y), _)| p != y)
            .map(|(_, &w)| w)
            .sum();
        if err >= chance {
            // no better than chance: reject the stage and stop
            break;
        }
        if err <= 0.0 {
            // perfect weak learner dominates; a single max-weight stage
            stages.push(Stage { tree: weak, alpha: learning_rate * ((k - 1.0).ln() + 30.0) });
            stage_errors.push(err);
            break;
        }
        let alpha = learning_rate * (((1.0 - err) / err).ln() + (k - 1.0).ln());
        for (w, (p, y)) in weights.iter_mut().zip(predictions.iter().zip(&train.y)) {
            if p != y {
                *w *= alpha.exp().min(1e300);
            }
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        stages.push(Stage { tree: weak, alpha });
        stage_errors.push(err);
    }
    if stages.is_empty() {
        return Err(Error::Classifier(
            "adaboost: first weak learner no better than chance".into(),
        ));
    }
    Ok(AdaBoostModel { stages, stage_errors })
}

impl AdaBoostModel {
    pub fn predict_scores(&self, x: &[f64], n_classes: usize) -> Vec<f64> {
        let mut votes = vec![0.0; n_classes];
        let mut total = 0.0;
        for stage in &self.stages {
            votes[argmax(stage.tree.leaf_values(x))] += stage.alpha;
            total += stage.alpha;
        }
        if total > 0.0 {
            votes.iter_mut().for_each(|v| *v /= total);
        }
        votes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_bands() -> TrainSet {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..90 {
            let v = i as f64 * 0.1;
            x.push(vec![v, (i % 5) as f64]);
            y.push(i / 30);
        }
        TrainSet { x, y, n_classes: 3 }
    }

    #[test]
    fn accepted_stages_beat_chance() {
        let train = three_bands();
        let model = fit(&train, &Params::new(), 2).unwrap();
        let chance = 1.0 - 1.0 / 3.0;
        for &e in &model.stage_errors {
            assert!(e < chance, "stage error {e} not below {chance}");
        }
    }

    #[test]
    fn fits_separable_bands() {
        let train = three_bands();
        let model = fit(&train, &Params::new(), 2).unwrap();
        let correct = train
            .x
            .iter()
            .zip(&train.y)
            .filter(|(x, &y)| argmax(&model.predict_scores(x, 3)) == y)
            .count();
        assert!(correct as f64 / train.x.len() as f64 > 0.95);
    }

    #[test]
    fn scores_form_a_distribution() {
        let train = three_bands();
        let model = fit(&train, &Params::new(), 2).unwrap();
        let s = model.predict_scores(&[1.5, 2.0], 3);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(s.iter().all(|&v| v >= 0.0));
    }
}
