//! Multi-layer perceptron: ReLU hidden layers, softmax output,
//! cross-entropy loss, mini-batch gradient descent with momentum and early
//! stopping on a held-out subset of the training rows.
//!
//! Parameters live in one flat vector (per layer: row-major weights, then
//! biases) so the analytic gradient can be checked against finite
//! differences.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{param_f64, param_usize, softmax, Params, TrainSet};
use crate::{Error, Result};

pub const DEFAULT_HIDDEN_LAYERS: usize = 1;
pub const DEFAULT_WIDTH: usize = 32;
pub const DEFAULT_LEARNING_RATE: f64 = 0.01;
pub const DEFAULT_BATCH: usize = 32;
pub const MOMENTUM: f64 = 0.9;
pub const MAX_EPOCHS: usize = 200;
pub const PATIENCE: usize = 10;
const VALIDATION_FRACTION: f64 = 0.1;

/// Layer sizes from input to output, e.g. `[22, 32, 6]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpArch {
    pub layer_sizes: Vec<usize>,
}

impl MlpArch {
    pub fn n_params(&self) -> usize {
        self.layer_sizes
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    /// Forward pass returning the pre-softmax logits and, for backprop, the
    /// post-ReLU activation of every layer (input included).
    fn forward(&self, params: &[f64], x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut activations = vec![x.to_vec()];
        let mut offset = 0;
        let n_layers = self.layer_sizes.len() - 1;
        for l in 0..n_layers {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let w = &params[offset..offset + fan_in * fan_out];
            let b = &params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
            offset += fan_in * fan_out + fan_out;
            let input = activations.last().unwrap();
            let mut out: Vec<f64> = (0..fan_out)
                .map(|o| {
                    b[o] + w[o * fan_in..(o + 1) * fan_in]
                        .iter()
                        .zip(input)
                        .map(|(wi, xi)| wi * xi)
                        .sum::<f64>()
                })
                .collect();
            if l + 1 < n_layers {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            activations.push(out);
        }
        let logits = activations.last().unwrap().clone();
        (logits, activations)
    }

    /// Mean cross-entropy over the batch plus its analytic gradient with
    /// respect to the flat parameter vector.
    pub fn loss_and_grad(
        &self,
        params: &[f64],
        x: &[Vec<f64>],
        y: &[usize],
    ) -> (f64, Vec<f64>) {
        let n = x.len() as f64;
        let n_layers = self.layer_sizes.len() - 1;
        let mut grad = vec![0.0; params.len()];
        let mut loss = 0.0;
        for (xi, &yi) in x.iter().zip(y) {
            let (logits, activations) = self.forward(params, xi);
            let p = softmax(&logits);
            loss += -(p[yi].max(1e-300)).ln();
            // delta at the output layer
            let mut delta: Vec<f64> = p
                .iter()
                .enumerate()
                .map(|(c, &pc)| pc - if c == yi { 1.0 } else { 0.0 })
                .collect();
            // walk layers backwards accumulating weight/bias gradients
            let mut offsets = Vec::with_capacity(n_layers);
            let mut off = 0;
            for l in 0..n_layers {
                offsets.push(off);
                off += self.layer_sizes[l] * self.layer_sizes[l + 1] + self.layer_sizes[l + 1];
            }
            for l in (0..n_layers).rev() {
                let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
                let off = offsets[l];
                let input = &activations[l];
                for o in 0..fan_out {
                    for i in 0..fan_in {
                        grad[off + o * fan_in + i] += delta[o] * input[i];
                    }
                    grad[off + fan_in * fan_out + o] += delta[o];
                }
                if l > 0 {
                    let w = &params[off..off + fan_in * fan_out];
                    let mut prev = vec![0.0; fan_in];
                    for (i, pv) in prev.iter_mut().enumerate() {
                        if activations[l][i] > 0.0 {
                            *pv = (0..fan_out).map(|o| delta[o] * w[o * fan_in + i]).sum();
                        }
                    }
                    delta = prev;
                }
            }
        }
        grad.iter_mut().for_each(|g| *g /= n);
        (loss / n, grad)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MlpModel {
    pub arch: MlpArch,
    pub params: Vec<f64>,
}

/// Glorot-uniform initialization of the flat parameter vector.
pub fn init_params(arch: &MlpArch, rng: &mut impl Rng) -> Vec<f64> {
    let mut params = Vec::with_capacity(arch.n_params());
    for w in arch.layer_sizes.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for _ in 0..fan_in * fan_out {
            params.push(rng.gen_range(-limit..limit));
        }
        params.extend(std::iter::repeat_n(0.0, fan_out));
    }
    params
}

/// Returns the trained model and whether the epoch cap was reached without
/// early stopping.
pub fn fit(train: &TrainSet, params: &Params, seed: u64) -> Result<(MlpModel, bool)> {
    let hidden_layers = param_usize(params, "hidden_layers", DEFAULT_HIDDEN_LAYERS)?;
    let width = param_usize(params, "width", DEFAULT_WIDTH)?;
    let lr = param_f64(params, "learning_rate", DEFAULT_LEARNING_RATE)?;
    let batch = param_usize(params, "batch_size", DEFAULT_BATCH)?.max(1);
    if !(1..=2).contains(&hidden_layers) {
        return Err(Error::Classifier("hidden_layers must be 1 or 2".into()));
    }
    if ![16, 32, 64, 128].contains(&width) {
        return Err(Error::Classifier("width must be one of 16, 32, 64, 128".into()));
    }
    let mut layer_sizes = vec![train.dim()];
    layer_sizes.extend(std::iter::repeat_n(width, hidden_layers));
    layer_sizes.push(train.n_classes);
    let arch = MlpArch { layer_sizes };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = init_params(&arch, &mut rng);
    let mut velocity = vec![0.0; theta.len()];

    let mut order: Vec<usize> = (0..train.x.len()).collect();
    order.shuffle(&mut rng);
    let n_val = ((train.x.len() as f64) * VALIDATION_FRACTION).floor() as usize;
    let (val_idx, fit_idx) = order.split_at(n_val);
    let gather = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<usize>) {
        (
            idx.iter().map(|&i| train.x[i].clone()).collect(),
            idx.iter().map(|&i| train.y[i]).collect(),
        )
    };
    let (val_x, val_y) = gather(val_idx);
    let (fit_x, fit_y) = gather(fit_idx);
    let early_stop = !val_x.is_empty();

    let mut best_theta = theta.clone();
    let mut best_val = f64::INFINITY;
    let mut stale = 0usize;
    let mut cap_reached = true;
    let mut batch_order: Vec<usize> = (0..fit_x.len()).collect();
    for _ in 0..MAX_EPOCHS {
        batch_order.shuffle(&mut rng);
        for chunk in batch_order.chunks(batch) {
            let bx: Vec<Vec<f64>> = chunk.iter().map(|&i| fit_x[i].clone()).collect();
            let by: Vec<usize> = chunk.iter().map(|&i| fit_y[i]).collect();
            let (_, grad) = arch.loss_and_grad(&theta, &bx, &by);
            for ((t, v), g) in theta.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = MOMENTUM * *v - lr * g;
                *t += *v;
            }
        }
        if early_stop {
            let (val_loss, _) = arch.loss_and_grad(&theta, &val_x, &val_y);
            if val_loss + 1e-12 < best_val {
                best_val = val_loss;
                best_theta = theta.clone();
                stale = 0;
            } else {
                stale += 1;
                if stale >= PATIENCE {
                    cap_reached = false;
                    break;
                }
            }
        }
    }
    let final_theta = if early_stop { best_theta } else { theta };
    Ok((MlpModel { arch, params: final_theta }, cap_reached))
}

impl MlpModel {
    pub fn predict_scores(&self, x: &[f64], n_classes: usize) -> Vec<f64> {
        let (logits, _) = self.arch.forward(&self.params, x);
        debug_assert_eq!(logits.len(), n_classes);
        softmax(&logits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_gradient_matches_central_differences() {
        let arch = MlpArch { layer_sizes: vec![4, 16, 3] };
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let theta = init_params(&arch, &mut rng);
        let x: Vec<Vec<f64>> =
            (0..8).map(|_| (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let y: Vec<usize> = (0..8).map(|_| rng.gen_range(0..3)).collect();
        let (_, grad) = arch.loss_and_grad(&theta, &x, &y);
        let h = 1e-6;
        for i in (0..theta.len()).step_by(7) {
            let mut plus = theta.clone();
            plus[i] += h;
            let mut minus = theta.clone();
            minus[i] -= h;
            let (lp, _) = arch.loss_and_grad(&plus, &x, &y);
            let (lm, _) = arch.loss_and_grad(&minus, &x, &y);
            let numeric = (lp - lm) / (2.0 * h);
            let denom = grad[i].abs().max(numeric.abs()).max(1e-8);
            assert!(
                (grad[i] - numeric).abs() / denom < 1e-4,
                "param {i}: analytic {} vs numeric {}",
                grad[i],
                numeric
            );
        }
    }

    #[test]
    fn learns_xor_like_blobs() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..50 {
            let jitter = (i as f64) * 0.001;
            x.push(vec![0.0 + jitter, 0.0]);
            y.push(0);
            x.push(vec![5.0, 5.0 + jitter]);
            y.push(0);
            x.push(vec![0.0 + jitter, 5.0]);
            y.push(1);
            x.push(vec![5.0, 0.0 + jitter]);
            y.push(1);
        }
        let train = TrainSet { x: x.clone(), y: y.clone(), n_classes: 2 };
        let (model, _) = fit(&train, &Params::new(), 3).unwrap();
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(xi, &yi)| super::super::argmax(&model.predict_scores(xi, 2)) == yi)
            .count();
        assert!(correct as f64 / x.len() as f64 > 0.95, "accuracy {correct}/{}", x.len());
    }

    #[test]
    fn rejects_unsupported_width() {
        let train = TrainSet {
            x: vec![vec![0.0], vec![1.0]],
            y: vec![0, 1],
            n_classes: 2,
        };
        let mut p = Params::new();
        p.insert("width".into(), super::super::ParamValue::Int(20));
        assert!(fit(&train, &p, 0).is_err());
    }
}
