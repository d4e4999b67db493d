//! Eight supervised classifier families behind one fit/score interface.
//!
//! Every family is trained deterministically from a seed and produces
//! per-class scores; argmax with smallest-code tie-break defines the
//! predicted class. Families with probabilistic outputs return scores that
//! sum to one.

pub mod adaboost;
pub mod forest;
pub mod gboost;
pub mod knn;
pub mod lda;
pub mod linear_sgd;
pub mod mlp;
pub mod naive_bayes;
pub mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledFeatureSet;
use crate::edf::ArtifactClass;
use crate::{Error, Result};

/// The eight algorithm families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    AdaBoost,
    GaussianNb,
    Knn,
    Lda,
    Mlp,
    RandomForest,
    SgdLinear,
    GradientBoost,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::AdaBoost,
        Family::GaussianNb,
        Family::Knn,
        Family::Lda,
        Family::Mlp,
        Family::RandomForest,
        Family::SgdLinear,
        Family::GradientBoost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::AdaBoost => "adaboost",
            Family::GaussianNb => "gaussian_nb",
            Family::Knn => "knn",
            Family::Lda => "lda",
            Family::Mlp => "mlp",
            Family::RandomForest => "random_forest",
            Family::SgdLinear => "sgd_linear",
            Family::GradientBoost => "gradient_boost",
        }
    }

    /// Name used in report tables.
    pub fn report_name(self) -> &'static str {
        match self {
            Family::GradientBoost => "gradient_boost (xgboost-substitute)",
            other => other.name(),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name() == s.trim().to_lowercase())
            .ok_or_else(|| Error::Classifier(format!("unknown family {s:?}")))
    }
}

/// A single hyperparameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Text(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Real(x) => Some(*x),
            ParamValue::Int(i) => Some(*i as f64),
            ParamValue::Text(_) => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            ParamValue::Int(i) => Some(*i),
            ParamValue::Real(x) if x.fract() == 0.0 => Some(*x as i64),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Text(s) => Some(s),
            _ => None,
        }
    }
}

pub type Params = BTreeMap<String, ParamValue>;

pub(crate) fn param_f64(params: &Params, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Error::Classifier(format!("hyperparam {key} must be numeric"))),
    }
}

pub(crate) fn param_usize(params: &Params, key: &str, default: usize) -> Result<usize> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_i64()
            .filter(|&i| i >= 0)
            .map(|i| i as usize)
            .ok_or_else(|| Error::Classifier(format!("hyperparam {key} must be a non-negative integer"))),
    }
}

pub(crate) fn param_str<'a>(params: &'a Params, key: &str, default: &'a str) -> &'a str {
    params.get(key).and_then(|v| v.as_str()).unwrap_or(default)
}

/// A family plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSpec {
    pub family: Family,
    #[serde(default)]
    pub hyperparams: Params,
}

impl AlgorithmSpec {
    pub fn new(family: Family) -> Self {
        AlgorithmSpec { family, hyperparams: Params::new() }
    }
}

/// Training data in dense form: rows, integer labels, and the class count.
#[derive(Debug, Clone)]
pub struct TrainSet {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
    pub n_classes: usize,
}

impl TrainSet {
    pub fn from_labeled(set: &LabeledFeatureSet) -> Self {
        TrainSet {
            x: set.rows.iter().map(|r| r.features.clone()).collect(),
            y: set.rows.iter().map(|r| r.label.code()).collect(),
            n_classes: 6,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.first().map_or(0, |r| r.len())
    }

    fn distinct_classes(&self) -> Vec<usize> {
        let mut present: Vec<usize> = self.y.clone();
        present.sort_unstable();
        present.dedup();
        present
    }
}

/// The fitted parameters of one family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ModelKind {
    /// Degenerate single-class training input: always predicts that class.
    Constant { class: usize },
    GaussianNb(naive_bayes::GaussianNbModel),
    Knn(knn::KnnModel),
    Lda(lda::LdaModel),
    SgdLinear(linear_sgd::SgdLinearModel),
    Mlp(mlp::MlpModel),
    RandomForest(forest::ForestModel),
    AdaBoost(adaboost::AdaBoostModel),
    GradientBoost(gboost::GradientBoostModel),
}

/// A trained classifier of any family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Model {
    pub family: Family,
    pub n_classes: usize,
    pub dim: usize,
    pub seed: u64,
    /// Set when a family hit its iteration cap instead of converging.
    pub cap_reached: bool,
    pub kind: ModelKind,
}

/// Train one model. Deterministic given `(spec, train, seed)`.
pub fn fit(spec: &AlgorithmSpec, train: &TrainSet, seed: u64) -> Result<Model> {
    if train.x.is_empty() {
        return Err(Error::Classifier("empty training set".into()));
    }
    let dim = train.dim();
    if train.x.iter().any(|r| r.len() != dim) {
        return Err(Error::Classifier("inconsistent feature dimensions".into()));
    }
    if train.x.len() != train.y.len() {
        return Err(Error::Classifier("row/label count mismatch".into()));
    }
    let classes = train.distinct_classes();
    if let Some(&class) = classes.first().filter(|_| classes.len() == 1) {
        return Ok(Model {
            family: spec.family,
            n_classes: train.n_classes,
            dim,
            seed,
            cap_reached: false,
            kind: ModelKind::Constant { class },
        });
    }

    let mut cap_reached = false;
    let kind = match spec.family {
        Family::GaussianNb => ModelKind::GaussianNb(naive_bayes::fit(train, &spec.hyperparams)?),
        Family::Knn => ModelKind::Knn(knn::fit(train, &spec.hyperparams)?),
        Family::Lda => ModelKind::Lda(lda::fit(train, &spec.hyperparams)?),
        Family::SgdLinear => {
            ModelKind::SgdLinear(linear_sgd::fit(train, &spec.hyperparams, seed)?)
        }
        Family::Mlp => {
            let (model, capped) = mlp::fit(train, &spec.hyperparams, seed)?;
            cap_reached = capped;
            ModelKind::Mlp(model)
        }
        Family::RandomForest => ModelKind::RandomForest(forest::fit(train, &spec.hyperparams, seed)?),
        Family::AdaBoost => ModelKind::AdaBoost(adaboost::fit(train, &spec.hyperparams, seed)?),
        Family::GradientBoost => {
            ModelKind::GradientBoost(gboost::fit(train, &spec.hyperparams, seed)?)
        }
    };
    Ok(Model {
        family: spec.family,
        n_classes: train.n_classes,
        dim,
        seed,
        cap_reached,
        kind,
    })
}

impl Model {
    /// Per-class scores for one input. Probabilistic families return a
    /// distribution; argmax with smallest-code tie-break is the prediction.
    pub fn predict_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::Classifier(format!(
                "dimension mismatch: model expects {}, got {}",
                self.dim,
                x.len()
            )));
        }
        let k = self.n_classes;
        Ok(match &self.kind {
            ModelKind::Constant { class } => {
                let mut s = vec![0.0; k];
                s[*class] = 1.0;
                s
            }
            ModelKind::GaussianNb(m) => m.predict_scores(x, k),
            ModelKind::Knn(m) => m.predict_scores(x, k),
            ModelKind::Lda(m) => m.predict_scores(x, k),
            ModelKind::SgdLinear(m) => m.predict_scores(x, k),
            ModelKind::Mlp(m) => m.predict_scores(x, k),
            ModelKind::RandomForest(m) => m.predict_scores(x, k),
            ModelKind::AdaBoost(m) => m.predict_scores(x, k),
            ModelKind::GradientBoost(m) => m.predict_scores(x, k),
        })
    }

    pub fn predict_class(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.predict_scores(x)?))
    }
}

/// Index of the maximum score; ties break toward the smallest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Aggregate window scores into per-second epoch decisions. Every whole
/// second averages the scores of windows starting within it; epochs without
/// a window inherit the previous epoch's label (the first defaults to null).
pub fn predict_epochs(
    model: &Model,
    feats: &[(f64, Vec<f64>)],
) -> Result<Vec<(usize, ArtifactClass)>> {
    if feats.is_empty() {
        return Err(Error::Classifier("no feature vectors to aggregate".into()));
    }
    let last_epoch = feats.last().unwrap().0.floor() as usize;
    let mut sums: Vec<Option<(Vec<f64>, usize)>> = vec![None; last_epoch + 1];
    for (start_s, x) in feats {
        let epoch = start_s.floor() as usize;
        let scores = model.predict_scores(x)?;
        match &mut sums[epoch] {
            None => sums[epoch] = Some((scores, 1)),
            Some((acc, count)) => {
                for (a, s) in acc.iter_mut().zip(&scores) {
                    *a += s;
                }
                *count += 1;
            }
        }
    }
    let mut out = Vec::with_capacity(sums.len());
    let mut previous = ArtifactClass::Null;
    for (epoch, entry) in sums.into_iter().enumerate() {
        let label = match entry {
            Some((acc, count)) => {
                let mean: Vec<f64> = acc.iter().map(|a| a / count as f64).collect();
                ArtifactClass::from_code(argmax(&mean))
                    .ok_or_else(|| Error::Classifier("score vector wider than class set".into()))?
            }
            None => previous,
        };
        previous = label;
        out.push((epoch, label));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// EAM1 model serialization
// ---------------------------------------------------------------------------

const EAM_MAGIC: &[u8; 4] = b"EAM1";

/// Serialize a model to the versioned EAM1 container.
pub fn encode_model(model: &Model) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend(EAM_MAGIC);
    let family = model.family.name().as_bytes();
    out.push(family.len() as u8);
    out.extend(family);
    let blob = serde_json::to_vec(model)
        .map_err(|e| Error::Classifier(format!("model serialization failed: {e}")))?;
    out.extend((blob.len() as u64).to_le_bytes());
    out.extend(blob);
    Ok(out)
}

pub fn decode_model(bytes: &[u8]) -> Result<Model> {
    if bytes.len() < 5 || &bytes[..4] != EAM_MAGIC {
        return Err(Error::Classifier("bad model magic".into()));
    }
    let name_len = bytes[4] as usize;
    let mut pos = 5 + name_len;
    let blob_len = u64::from_le_bytes(
        bytes
            .get(pos..pos + 8)
            .ok_or_else(|| Error::Classifier("truncated model file".into()))?
            .try_into()
            .unwrap(),
    ) as usize;
    pos += 8;
    let blob = bytes
        .get(pos..pos + blob_len)
        .ok_or_else(|| Error::Classifier("truncated model file".into()))?;
    serde_json::from_slice(blob).map_err(|e| Error::Classifier(format!("model decode failed: {e}")))
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    std::fs::write(path, encode_model(model)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<Model> {
    decode_model(&std::fs::read(path)?)
}

pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

#[cfg(test)]
pub mod testutil;
