//! Multinomial logistic regression trained by stochastic gradient descent
//! with L2 regularization and an inverse-scaling step schedule.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{param_f64, param_usize, softmax, Params, TrainSet};
use crate::{Error, Result};

pub const DEFAULT_L2: f64 = 1e-5;
pub const DEFAULT_ETA0: f64 = 0.05;
/// Exponent of the inverse-scaling schedule `eta0 / t^POWER_T`.
pub const POWER_T: f64 = 0.25;
pub const DEFAULT_EPOCHS: usize = 100;
pub const MAX_EPOCHS: usize = 200;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SgdLinearModel {
    /// n_classes x dim weight matrix, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub dim: usize,
}

pub fn fit(train: &TrainSet, params: &Params, seed: u64) -> Result<SgdLinearModel> {
    let l2 = param_f64(params, "l2", DEFAULT_L2)?;
    let eta0 = param_f64(params, "eta0", DEFAULT_ETA0)?;
    let epochs = param_usize(params, "epochs", DEFAULT_EPOCHS)?;
    if epochs == 0 || epochs > MAX_EPOCHS {
        return Err(Error::Classifier(format!("epochs must be in 1..={MAX_EPOCHS}")));
    }
    let dim = train.dim();
    let k = train.n_classes;
    let mut weights = vec![0.0; k * dim];
    let mut bias = vec![0.0; k];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..train.x.len()).collect();
    let mut step = 0u64;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            step += 1;
            let eta = eta0 / (step as f64).powf(POWER_T);
            let x = &train.x[i];
            let logits: Vec<f64> = (0..k)
                .map(|c| {
                    bias[c]
                        + weights[c * dim..(c + 1) * dim]
                            .iter()
                            .zip(x)
                            .map(|(w, v)| w * v)
                            .sum::<f64>()
                })
                .collect();
            let p = softmax(&logits);
            for c in 0..k {
                let grad = p[c] - if c == train.y[i] { 1.0 } else { 0.0 };
                bias[c] -= eta * grad;
                for (w, v) in weights[c * dim..(c + 1) * dim].iter_mut().zip(x) {
                    *w -= eta * (grad * v + l2 * *w);
                }
            }
        }
    }
    Ok(SgdLinearModel { weights, bias, dim })
}

impl SgdLinearModel {
    pub fn predict_scores(&self, x: &[f64], n_classes: usize) -> Vec<f64> {
        let logits: Vec<f64> = (0..n_classes)
            .map(|c| {
                if c * self.dim >= self.weights.len() {
                    return f64::NEG_INFINITY;
                }
                self.bias[c]
                    + self.weights[c * self.dim..(c + 1) * self.dim]
                        .iter()
                        .zip(x)
                        .map(|(w, v)| w * v)
                        .sum::<f64>()
            })
            .collect();
        softmax(&logits)
    }
}
