//! Gaussian naive Bayes: per-class feature means and variances with a
//! variance-smoothing term, posterior scores via log-sum-exp.

use serde::{Deserialize, Serialize};

use super::{param_f64, softmax, Params, TrainSet};
use crate::Result;

pub const DEFAULT_VAR_SMOOTHING: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianNbModel {
    /// Per class: prior, means, smoothed variances. Classes absent from
    /// training keep a `None` slot and score zero posterior.
    pub classes: Vec<Option<ClassStats>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassStats {
    pub log_prior: f64,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
}

pub fn fit(train: &TrainSet, params: &Params) -> Result<GaussianNbModel> {
    let var_smoothing = param_f64(params, "var_smoothing", DEFAULT_VAR_SMOOTHING)?;
    let dim = train.dim();
    let n = train.x.len() as f64;
    let mut classes = vec![None; train.n_classes];
    for (c, slot) in classes.iter_mut().enumerate() {
        let rows: Vec<&Vec<f64>> = train
            .x
            .iter()
            .zip(&train.y)
            .filter(|(_, &y)| y == c)
            .map(|(x, _)| x)
            .collect();
        if rows.is_empty() {
            continue;
        }
        let nc = rows.len() as f64;
        let mut means = vec![0.0; dim];
        for r in &rows {
            for (m, v) in means.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= nc);
        let mut variances = vec![0.0; dim];
        for r in &rows {
            for ((var, v), m) in variances.iter_mut().zip(r.iter()).zip(&means) {
                *var += (v - m) * (v - m);
            }
        }
        variances.iter_mut().for_each(|v| *v = *v / nc + var_smoothing);
        *slot = Some(ClassStats { log_prior: (nc / n).ln(), means, variances });
    }
    Ok(GaussianNbModel { classes })
}

impl GaussianNbModel {
    pub fn predict_scores(&self, x: &[f64], n_classes: usize) -> Vec<f64> {
        let log_posteriors: Vec<f64> = (0..n_classes)
            .map(|c| match self.classes.get(c).and_then(|s| s.as_ref()) {
                None => f64::NEG_INFINITY,
                Some(stats) => {
                    let mut ll = stats.log_prior;
                    for ((v, m), var) in x.iter().zip(&stats.means).zip(&stats.variances) {
                        ll += -0.5 * (2.0 * std::f64::consts::PI * var).ln()
                            - (v - m) * (v - m) / (2.0 * var);
                    }
                    ll
                }
            })
            .collect();
        softmax(&log_posteriors)
    }
}
