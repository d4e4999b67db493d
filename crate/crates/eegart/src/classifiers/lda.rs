//! Linear discriminant analysis: shared-covariance Gaussian model with
//! optional shrinkage toward the scaled identity, solved by symmetric
//! eigendecomposition.

use serde::{Deserialize, Serialize};

use super::{param_f64, softmax, Params, TrainSet};
use crate::dsp;
use crate::{Error, Result};

pub const DEFAULT_SHRINKAGE: f64 = 0.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LdaModel {
    /// Per class: `None` for classes absent from training.
    pub classes: Vec<Option<ClassDiscriminant>>,
    pub dim: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassDiscriminant {
    /// Precomputed `inv(Sigma) * mu_c`.
    pub weight: Vec<f64>,
    /// `-0.5 * mu_c' inv(Sigma) mu_c + ln pi_c`.
    pub bias: f64,
}

pub fn fit(train: &TrainSet, params: &Params) -> Result<LdaModel> {
    let shrinkage = param_f64(params, "shrinkage", DEFAULT_SHRINKAGE)?;
    if !(0.0..=1.0).contains(&shrinkage) {
        return Err(Error::Classifier(format!("shrinkage {shrinkage} outside [0, 1]")));
    }
    let dim = train.dim();
    let n = train.x.len() as f64;

    // class means and priors
    let mut means: Vec<Option<Vec<f64>>> = vec![None; train.n_classes];
    let mut counts = vec![0usize; train.n_classes];
    for (x, &y) in train.x.iter().zip(&train.y) {
        let m = means[y].get_or_insert_with(|| vec![0.0; dim]);
        for (mi, xi) in m.iter_mut().zip(x) {
            *mi += xi;
        }
        counts[y] += 1;
    }
    for (m, &c) in means.iter_mut().zip(&counts) {
        if let Some(m) = m {
            m.iter_mut().for_each(|v| *v /= c as f64);
        }
    }

    // pooled within-class covariance
    let mut cov = vec![0.0; dim * dim];
    for (x, &y) in train.x.iter().zip(&train.y) {
        let m = means[y].as_ref().unwrap();
        for i in 0..dim {
            let di = x[i] - m[i];
            for j in i..dim {
                cov[i * dim + j] += di * (x[j] - m[j]);
            }
        }
    }
    for i in 0..dim {
        for j in i..dim {
            cov[i * dim + j] /= n;
            cov[j * dim + i] = cov[i * dim + j];
        }
    }
    let trace: f64 = (0..dim).map(|i| cov[i * dim + i]).sum();
    let iso = trace / dim as f64;
    for i in 0..dim {
        for j in 0..dim {
            cov[i * dim + j] *= 1.0 - shrinkage;
        }
        cov[i * dim + i] += shrinkage * iso;
    }

    // invert via the Jacobi eigendecomposition
    let eig = dsp::jacobi_eigen(&cov, dim)?;
    let max_eig = eig.values.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = 1e-10 * max_eig.max(f64::MIN_POSITIVE);
    if eig.values.iter().any(|&l| l < cutoff) {
        return Err(Error::Classifier(
            "singular covariance: increase shrinkage above 0".into(),
        ));
    }
    let mut inv = vec![0.0; dim * dim];
    for k in 0..dim {
        let scale = 1.0 / eig.values[k];
        for i in 0..dim {
            let vik = eig.vectors[i * dim + k];
            for j in 0..dim {
                inv[i * dim + j] += scale * vik * eig.vectors[j * dim + k];
            }
        }
    }

    let classes = means
        .iter()
        .zip(&counts)
        .map(|(m, &c)| {
            m.as_ref().map(|mu| {
                let weight: Vec<f64> = (0..dim)
                    .map(|i| (0..dim).map(|j| inv[i * dim + j] * mu[j]).sum())
                    .collect();
                let quad: f64 = mu.iter().zip(&weight).map(|(a, b)| a * b).sum();
                ClassDiscriminant { weight, bias: -0.5 * quad + (c as f64 / n).ln() }
            })
        })
        .collect();
    Ok(LdaModel { classes, dim })
}

impl LdaModel {
    pub fn predict_scores(&self, x: &[f64], n_classes: usize) -> Vec<f64> {
        let discriminants: Vec<f64> = (0..n_classes)
            .map(|c| match self.classes.get(c).and_then(|d| d.as_ref()) {
                None => f64::NEG_INFINITY,
                Some(d) => {
                    let dot: f64 = d.weight.iter().zip(x).map(|(w, v)| w * v).sum();
                    dot + d.bias
                }
            })
            .collect();
        softmax(&discriminants)
    }
}
