//! k-nearest neighbors with Euclidean distance and vote-fraction scores.

use serde::{Deserialize, Serialize};

use super::{param_usize, Params, TrainSet};
use crate::{Error, Result};

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

pub fn fit(train: &TrainSet, params: &Params) -> Result<KnnModel> {
    let k = param_usize(params, "k", DEFAULT_K)?;
    if k == 0 {
        return Err(Error::Classifier("k must be at least 1".into()));
    }
    if k > train.x.len() {
        return Err(Error::Classifier(format!(
            "k = {k} exceeds training size {}",
            train.x.len()
        )));
    }
    Ok(KnnModel { k, x: train.x.clone(), y: train.y.clone() })
}

impl KnnModel {
    pub fn predict_scores(&self, x: &[f64], n_classes: usize) -> Vec<f64> {
        let mut dists: Vec<(f64, usize)> = self
            .x
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let d: f64 = r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, i)
            })
            .collect();
        // distance ties resolve by training index for determinism
        dists.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let mut votes = vec![0.0; n_classes];
        for (_, i) in dists.iter().take(self.k) {
            votes[self.y[*i]] += 1.0;
        }
        votes.iter_mut().for_each(|v| *v /= self.k as f64);
        votes
    }
}
